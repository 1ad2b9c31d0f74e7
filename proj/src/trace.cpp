#include "stlmine/trace.hpp"

namespace stlmine {

std::size_t Trace::size() const {
  if (channels.empty()) return 0;
  std::size_t n = channels.begin()->second.size();
  for (const auto& [name, samples] : channels) {
    if (samples.size() != n) {
      throw std::runtime_error("trace channel '" + name + "' has inconsistent length");
    }
  }
  return n;
}

const std::vector<double>& Trace::channel(const std::string& name) const {
  auto it = channels.find(name);
  if (it == channels.end()) throw std::out_of_range("unknown channel '" + name + "'");
  return it->second;
}

}  // namespace stlmine
