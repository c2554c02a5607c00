#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "echopose/phantom.hpp"
#include "echopose/rng.hpp"

namespace echopose::dataset {

using phantom::ScanRecord;

// Scan-level train/val/test split, ratio fixed at 3:1:1.
struct SplitSpec {
  uint64_t split_seed = 0;
};

struct Split {
  std::vector<int> train, val, test;  // indices into the scan list
};

// Sizes floor(0.6 n) / floor(0.2 n) / remainder after a seeded shuffle.
// Throws InsufficientDataError for fewer than 5 scans.
Split split_scans(const std::vector<ScanRecord>& scans, const SplitSpec& spec);

enum class VarianceMode {
  All,
  Straight,
  CS,
  Sub25,
  Sub50,
  Sub75,
  Frm50,
  Frm75,
};

const char* to_string(VarianceMode m);
VarianceMode variance_mode_from_string(const std::string& s);
std::vector<VarianceMode> all_variance_modes();

// Deterministic subset of the training scans. Straight/CS filter by protocol
// shape; SubP keeps ceil(P * n_subjects) subjects in seeded order (nested
// across P for a fixed seed); FrmP truncates every scan to its first
// ceil(P * N) frames. Throws InsufficientDataError when the result is empty.
std::vector<ScanRecord> apply_variance_mode(
    const std::vector<ScanRecord>& train, VarianceMode mode, uint64_t seed);

// Class-label construction. Subject classes are indexed over the distinct
// training subjects; the auxiliary labels are training-time-only.
struct LabelMaps {
  std::map<int, int> subject_class;  // subject_id -> class index
  int n_subject_classes = 0;
  int n_protocol_classes = 6;  // 3 or 6
};

LabelMaps build_label_maps(const std::vector<ScanRecord>& train,
                           int n_protocol_classes);

int protocol_class(const phantom::ProtocolSpec& p, int n_protocol_classes);

// A training sample: M consecutive frames of one scan plus its targets.
struct SequenceSample {
  const ScanRecord* scan = nullptr;
  int start = 0;
  int length = 0;                                  // M
  std::vector<geometry::RigidTransform> targets;   // M-1 relative transforms
  int subject_class = -1;                          // t^a_1 as class index
  int protocol_class = -1;                         // t^a_2 as class index
};

// Uniform start in [0, N-M]. Throws InsufficientDataError when the scan is
// shorter than M (callers should filter through build_sampling_pool).
SequenceSample sample_subsequence(const ScanRecord& scan, int m,
                                  RandomStream& rng, const LabelMaps& labels);

// Scans eligible for window length M; short scans are skipped and reported.
struct SamplingPool {
  std::vector<int> eligible;               // indices into the scan list
  std::vector<std::string> skipped_scans;  // scan_ids shorter than M
};

SamplingPool build_sampling_pool(const std::vector<ScanRecord>& scans, int m);

// Loads every *.scan file in a directory (sorted by filename).
std::vector<ScanRecord> load_scans(const std::string& dir);

// Reproducibility manifest: scan ids per split, plus per-mode training
// subsets. JSON text.
void write_split_manifest(const std::string& path,
                          const std::vector<ScanRecord>& scans,
                          const Split& split,
                          const std::map<std::string, std::vector<std::string>>&
                              mode_scan_ids);

}  // namespace echopose::dataset
