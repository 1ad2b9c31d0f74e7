#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlmine/dataset.hpp"

namespace stlmine {

/// Time-in-range class of one chunk, ordered best to worst.
enum class TirClass { C100, C75_99, C50_74, CLt50 };

inline constexpr TirClass kAllTirClasses[] = {TirClass::C100, TirClass::C75_99,
                                              TirClass::C50_74, TirClass::CLt50};

const char* tir_class_name(TirClass c);

/// Glycemic thresholds. Defaults: band 70-180 mg/dL, class cuts at
/// 100/75/50 percent, cluster cuts at 79/70/60 percent average TIR, and a
/// 75 percent cut for cluster-level binary labels. All overridable.
struct LabelPolicy {
  double band_lo = 70.0;
  double band_hi = 180.0;
  double cut_c100 = 100.0;
  double cut_c75 = 75.0;
  double cut_c50 = 50.0;
  double cluster_hi = 79.0;
  double cluster_mid = 70.0;
  double cluster_lo = 60.0;
  double cluster_pos_cut = 75.0;
};

/// Percentage of the chunk's CGM samples inside [band_lo, band_hi].
/// Throws DatasetError on an invalid (CGM-gapped) chunk.
double time_in_range(const Chunk& c, const LabelPolicy& policy = {});

TirClass tir_class(double pct, const LabelPolicy& policy = {});

/// Chunks with one binary task's labels. Invalid chunks are dropped before
/// labeling, so chunks/labels always line up and labels are exactly +1/-1.
struct LabeledDataset {
  std::string task;
  std::vector<Chunk> chunks;
  std::vector<int> labels;

  std::size_t positives() const;
  std::size_t negatives() const;
};

/// One-vs-all: +1 iff the chunk's class equals target.
LabeledDataset one_vs_all(const std::vector<Chunk>& chunks, TirClass target,
                          const LabelPolicy& policy = {});

/// Patient clusters by average TIR over valid chunks:
/// 1: avg > 79, 2: 70 <= avg <= 79, 3: 60 <= avg < 70, 4: avg < 60.
struct ClusterAssignment {
  std::map<std::string, int> cluster_of;
  std::map<std::string, double> avg_tir;
  std::vector<std::string> warnings;  // patients excluded for lack of valid chunks
};

ClusterAssignment cluster_patients(const std::vector<Chunk>& chunks,
                                   const LabelPolicy& policy = {});

/// Cluster-level binary labels: +1 iff chunk TIR >= cluster_pos_cut.
LabeledDataset cluster_labels(const std::vector<Chunk>& chunks,
                              const LabelPolicy& policy = {});

/// CSV export: patient_id,chunk_index,chunk_start,tir_pct,class,
/// label_c100,label_c7599,label_c5074,label_lt50 (valid chunks only).
void write_labels_csv(const std::vector<Chunk>& chunks, const std::string& path,
                      const LabelPolicy& policy = {});

}  // namespace stlmine
