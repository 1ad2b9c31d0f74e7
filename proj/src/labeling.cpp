#include "stlmine/labeling.hpp"

#include <fstream>

#include "stlmine/util.hpp"

namespace stlmine {

const char* tir_class_name(TirClass c) {
  switch (c) {
    case TirClass::C100: return "c100";
    case TirClass::C75_99: return "c7599";
    case TirClass::C50_74: return "c5074";
    case TirClass::CLt50: return "lt50";
  }
  return "?";
}

double time_in_range(const Chunk& c, const LabelPolicy& policy) {
  if (!c.valid)
    throw DatasetError("chunk " + c.patient_id + "#" + std::to_string(c.index) +
                       " has gapped CGM and cannot be labeled");
  const auto& cgm = c.trace.channel("cgm");
  std::size_t in = 0;
  for (double v : cgm)
    if (v >= policy.band_lo && v <= policy.band_hi) ++in;
  return 100.0 * static_cast<double>(in) / static_cast<double>(cgm.size());
}

TirClass tir_class(double pct, const LabelPolicy& policy) {
  if (pct >= policy.cut_c100) return TirClass::C100;
  if (pct >= policy.cut_c75) return TirClass::C75_99;
  if (pct >= policy.cut_c50) return TirClass::C50_74;
  return TirClass::CLt50;
}

std::size_t LabeledDataset::positives() const {
  std::size_t k = 0;
  for (int l : labels)
    if (l > 0) ++k;
  return k;
}

std::size_t LabeledDataset::negatives() const { return labels.size() - positives(); }

LabeledDataset one_vs_all(const std::vector<Chunk>& chunks, TirClass target,
                          const LabelPolicy& policy) {
  LabeledDataset ds;
  ds.task = std::string("class_") + tir_class_name(target);
  for (const Chunk& c : chunks) {
    if (!c.valid) continue;
    ds.chunks.push_back(c);
    ds.labels.push_back(tir_class(time_in_range(c, policy), policy) == target ? 1 : -1);
  }
  return ds;
}

ClusterAssignment cluster_patients(const std::vector<Chunk>& chunks,
                                   const LabelPolicy& policy) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  std::map<std::string, bool> seen;
  for (const Chunk& c : chunks) {
    seen[c.patient_id] = true;
    if (!c.valid) continue;
    auto& [sum, n] = acc[c.patient_id];
    sum += time_in_range(c, policy);
    ++n;
  }
  ClusterAssignment out;
  for (const auto& [patient, flag] : seen) {
    auto it = acc.find(patient);
    if (it == acc.end() || it->second.second == 0) {
      out.warnings.push_back("patient " + patient + " has no valid chunks; unclustered");
      continue;
    }
    double avg = it->second.first / static_cast<double>(it->second.second);
    out.avg_tir[patient] = avg;
    int cluster = 4;
    if (avg > policy.cluster_hi) cluster = 1;
    else if (avg >= policy.cluster_mid) cluster = 2;
    else if (avg >= policy.cluster_lo) cluster = 3;
    out.cluster_of[patient] = cluster;
  }
  return out;
}

LabeledDataset cluster_labels(const std::vector<Chunk>& chunks,
                              const LabelPolicy& policy) {
  LabeledDataset ds;
  ds.task = "cluster_tir75";
  for (const Chunk& c : chunks) {
    if (!c.valid) continue;
    ds.chunks.push_back(c);
    ds.labels.push_back(time_in_range(c, policy) >= policy.cluster_pos_cut ? 1 : -1);
  }
  return ds;
}

void write_labels_csv(const std::vector<Chunk>& chunks, const std::string& path,
                      const LabelPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write '" + path + "'");
  out << "patient_id,chunk_index,chunk_start,tir_pct,class,"
         "label_c100,label_c7599,label_c5074,label_lt50\n";
  for (const Chunk& c : chunks) {
    if (!c.valid) continue;
    double pct = time_in_range(c, policy);
    TirClass cls = tir_class(pct, policy);
    out << c.patient_id << ',' << c.index << ',' << format_iso8601(c.start_epoch_s)
        << ',' << format_double(pct) << ',' << tir_class_name(cls);
    for (TirClass t : kAllTirClasses) out << ',' << (cls == t ? 1 : -1);
    out << '\n';
  }
  if (!out) throw DatasetError("write failed for '" + path + "'");
}

}  // namespace stlmine
