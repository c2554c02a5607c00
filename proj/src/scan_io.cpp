#include "echopose/scan_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "echopose/errors.hpp"

namespace echopose::scan_io {

using json = nlohmann::json;
using phantom::ProtocolSpec;
using phantom::ScanRecord;

namespace {

constexpr char kMagic[8] = {'E', 'P', 'S', 'C', 'A', 'N', '0', '1'};

json protocol_to_json(const ProtocolSpec& p) {
  return json{{"shape", phantom::to_string(p.shape)},
              {"orientation", phantom::to_string(p.orientation)},
              {"path_length_mm", p.path_length_mm},
              {"curvature_per_mm", p.curvature_per_mm},
              {"class_id3", p.class_id3()},
              {"class_id6", p.class_id6()}};
}

ProtocolSpec protocol_from_json(const json& j) {
  ProtocolSpec p;
  p.shape = phantom::path_shape_from_string(j.at("shape").get<std::string>());
  p.orientation =
      phantom::orientation_from_string(j.at("orientation").get<std::string>());
  p.path_length_mm = j.at("path_length_mm").get<double>();
  p.curvature_per_mm = j.at("curvature_per_mm").get<double>();
  return p;
}

}  // namespace

void write_scan(const std::string& path, const ScanRecord& scan) {
  if (scan.frames.size() != scan.world_poses.size())
    throw InvalidInputError("write_scan: frames/poses length mismatch");

  json header{{"version", 1},
              {"scan_id", scan.scan_id},
              {"subject_id", scan.subject_id},
              {"protocol", protocol_to_json(scan.protocol)},
              {"geometry",
               {{"height_px", scan.geometry.height_px},
                {"width_px", scan.geometry.width_px},
                {"spacing_mm", scan.geometry.spacing_mm}}},
              {"seeds",
               {{"subject_seed", scan.subject_seed},
                {"frame_seed", scan.frame_seed}}},
              {"n_frames", scan.n_frames()}};
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_scan: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  const size_t hw = static_cast<size_t>(scan.geometry.height_px) *
                    static_cast<size_t>(scan.geometry.width_px);
  for (const auto& frame : scan.frames) {
    if (frame.size() != hw)
      throw InvalidInputError("write_scan: frame size mismatch");
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size() * sizeof(float)));
  }
  for (const auto& pose : scan.world_poses) {
    const std::array<double, 6> p = pose.params();
    out.write(reinterpret_cast<const char*>(p.data()), sizeof(p));
  }
  if (!out) throw std::runtime_error("write_scan: write failed for " + path);
}

ScanRecord read_scan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_scan: cannot open " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInputError("read_scan: bad magic in " + path);

  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw InvalidInputError("read_scan: truncated header in " + path);

  const json header = json::parse(htext);
  ScanRecord scan;
  scan.scan_id = header.at("scan_id").get<std::string>();
  scan.subject_id = header.at("subject_id").get<int>();
  scan.protocol = protocol_from_json(header.at("protocol"));
  scan.geometry.height_px = header.at("geometry").at("height_px").get<int>();
  scan.geometry.width_px = header.at("geometry").at("width_px").get<int>();
  scan.geometry.spacing_mm =
      header.at("geometry").at("spacing_mm").get<double>();
  scan.subject_seed = header.at("seeds").at("subject_seed").get<uint64_t>();
  scan.frame_seed = header.at("seeds").at("frame_seed").get<uint64_t>();

  const int n = header.at("n_frames").get<int>();
  const size_t hw = static_cast<size_t>(scan.geometry.height_px) *
                    static_cast<size_t>(scan.geometry.width_px);
  scan.frames.assign(n, std::vector<float>(hw));
  for (auto& frame : scan.frames)
    in.read(reinterpret_cast<char*>(frame.data()),
            static_cast<std::streamsize>(hw * sizeof(float)));
  scan.world_poses.resize(n);
  for (auto& pose : scan.world_poses) {
    std::array<double, 6> p;
    in.read(reinterpret_cast<char*>(p.data()), sizeof(p));
    pose = geometry::RigidTransform::from_params(p.data());
  }
  if (!in) throw InvalidInputError("read_scan: truncated payload in " + path);
  return scan;
}

}  // namespace echopose::scan_io
