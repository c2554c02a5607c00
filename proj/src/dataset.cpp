#include "echopose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/scan_io.hpp"

namespace echopose::dataset {

namespace fs = std::filesystem;
using json = nlohmann::json;
using phantom::PathShape;

Split split_scans(const std::vector<ScanRecord>& scans,
                  const SplitSpec& spec) {
  const int n = static_cast<int>(scans.size());
  if (n < 5)
    throw InsufficientDataError("split_scans: need at least 5 scans, have " +
                                std::to_string(n));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RandomStream rng(sub_seed(spec.split_seed, "scan-split"));
  rng.shuffle(order);

  const int n_train = static_cast<int>(std::floor(0.6 * n));
  const int n_val = static_cast<int>(std::floor(0.2 * n));
  Split split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

const char* to_string(VarianceMode m) {
  switch (m) {
    case VarianceMode::All: return "All";
    case VarianceMode::Straight: return "Straight";
    case VarianceMode::CS: return "C-S";
    case VarianceMode::Sub25: return "Sub25";
    case VarianceMode::Sub50: return "Sub50";
    case VarianceMode::Sub75: return "Sub75";
    case VarianceMode::Frm50: return "Frm50";
    case VarianceMode::Frm75: return "Frm75";
  }
  return "?";
}

VarianceMode variance_mode_from_string(const std::string& s) {
  for (VarianceMode m : all_variance_modes())
    if (s == to_string(m)) return m;
  throw InvalidParameterError("unknown variance mode: " + s);
}

std::vector<VarianceMode> all_variance_modes() {
  return {VarianceMode::All,   VarianceMode::Straight, VarianceMode::CS,
          VarianceMode::Sub25, VarianceMode::Sub50,    VarianceMode::Sub75,
          VarianceMode::Frm50, VarianceMode::Frm75};
}

namespace {

std::vector<ScanRecord> filter_by_shape(const std::vector<ScanRecord>& train,
                                        bool keep_straight) {
  std::vector<ScanRecord> out;
  for (const ScanRecord& s : train)
    if ((s.protocol.shape == PathShape::Straight) == keep_straight)
      out.push_back(s);
  return out;
}

std::vector<ScanRecord> keep_subject_fraction(
    const std::vector<ScanRecord>& train, double fraction, uint64_t seed) {
  std::set<int> subject_set;
  for (const ScanRecord& s : train) subject_set.insert(s.subject_id);
  std::vector<int> subjects(subject_set.begin(), subject_set.end());

  // one seeded order shared by every fraction, so Sub25 ⊆ Sub50 ⊆ Sub75
  RandomStream rng(sub_seed(seed, "subject-subset"));
  rng.shuffle(subjects);
  const int keep = static_cast<int>(
      std::ceil(fraction * static_cast<double>(subjects.size())));
  std::set<int> kept(subjects.begin(), subjects.begin() + keep);

  std::vector<ScanRecord> out;
  for (const ScanRecord& s : train)
    if (kept.count(s.subject_id)) out.push_back(s);
  return out;
}

std::vector<ScanRecord> truncate_frames(const std::vector<ScanRecord>& train,
                                        double fraction) {
  std::vector<ScanRecord> out;
  out.reserve(train.size());
  for (const ScanRecord& s : train) {
    ScanRecord t = s;
    const int keep = static_cast<int>(
        std::ceil(fraction * static_cast<double>(s.n_frames())));
    t.frames.resize(keep);
    t.world_poses.resize(keep);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<ScanRecord> apply_variance_mode(
    const std::vector<ScanRecord>& train, VarianceMode mode, uint64_t seed) {
  if (train.empty())
    throw InsufficientDataError("apply_variance_mode: empty training set");

  std::vector<ScanRecord> out;
  switch (mode) {
    case VarianceMode::All: out = train; break;
    case VarianceMode::Straight: out = filter_by_shape(train, true); break;
    case VarianceMode::CS: out = filter_by_shape(train, false); break;
    case VarianceMode::Sub25: out = keep_subject_fraction(train, 0.25, seed); break;
    case VarianceMode::Sub50: out = keep_subject_fraction(train, 0.50, seed); break;
    case VarianceMode::Sub75: out = keep_subject_fraction(train, 0.75, seed); break;
    case VarianceMode::Frm50: out = truncate_frames(train, 0.50); break;
    case VarianceMode::Frm75: out = truncate_frames(train, 0.75); break;
  }
  if (out.empty())
    throw InsufficientDataError(
        std::string("apply_variance_mode: mode ") + to_string(mode) +
        " selected no scans");
  return out;
}

LabelMaps build_label_maps(const std::vector<ScanRecord>& train,
                           int n_protocol_classes) {
  if (n_protocol_classes != 3 && n_protocol_classes != 6)
    throw InvalidParameterError("n_protocol_classes must be 3 or 6");
  LabelMaps maps;
  maps.n_protocol_classes = n_protocol_classes;
  std::set<int> subjects;
  for (const ScanRecord& s : train) subjects.insert(s.subject_id);
  int next = 0;
  for (int id : subjects) maps.subject_class[id] = next++;
  maps.n_subject_classes = next;
  return maps;
}

int protocol_class(const phantom::ProtocolSpec& p, int n_protocol_classes) {
  return n_protocol_classes == 3 ? p.class_id3() : p.class_id6();
}

SequenceSample sample_subsequence(const ScanRecord& scan, int m,
                                  RandomStream& rng, const LabelMaps& labels) {
  if (m < 2) throw InvalidParameterError("sample_subsequence: M must be >= 2");
  const int n = scan.n_frames();
  if (n < m)
    throw InsufficientDataError("sample_subsequence: scan " + scan.scan_id +
                                " has " + std::to_string(n) +
                                " frames, needs " + std::to_string(m));

  SequenceSample sample;
  sample.scan = &scan;
  sample.length = m;
  sample.start = static_cast<int>(rng.integer(static_cast<uint64_t>(n - m + 1)));
  sample.targets.reserve(m - 1);
  for (int k = 0; k < m - 1; ++k)
    sample.targets.push_back(geometry::relative_pose(
        scan.world_poses[sample.start + k],
        scan.world_poses[sample.start + k + 1]));

  const auto it = labels.subject_class.find(scan.subject_id);
  sample.subject_class = it == labels.subject_class.end() ? -1 : it->second;
  sample.protocol_class =
      protocol_class(scan.protocol, labels.n_protocol_classes);
  return sample;
}

SamplingPool build_sampling_pool(const std::vector<ScanRecord>& scans, int m) {
  SamplingPool pool;
  for (int i = 0; i < static_cast<int>(scans.size()); ++i) {
    if (scans[i].n_frames() >= m)
      pool.eligible.push_back(i);
    else
      pool.skipped_scans.push_back(scans[i].scan_id);
  }
  return pool;
}

std::vector<ScanRecord> load_scans(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".scan")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw InsufficientDataError("load_scans: no .scan files in " + dir);

  std::vector<ScanRecord> scans;
  scans.reserve(files.size());
  for (const std::string& f : files) scans.push_back(scan_io::read_scan(f));
  return scans;
}

void write_split_manifest(
    const std::string& path, const std::vector<ScanRecord>& scans,
    const Split& split,
    const std::map<std::string, std::vector<std::string>>& mode_scan_ids) {
  auto ids = [&](const std::vector<int>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(scans[i].scan_id);
    return out;
  };
  json j{{"train", ids(split.train)},
         {"val", ids(split.val)},
         {"test", ids(split.test)}};
  if (!mode_scan_ids.empty()) j["modes"] = mode_scan_ids;

  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("write_split_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace echopose::dataset
