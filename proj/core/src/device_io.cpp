#include "umesh/device_io.hpp"

#include <fstream>

namespace umesh {

using nlohmann::json;

json crosstalk_to_json(const CrosstalkModel& model) {
  json taps = json::array();
  for (const auto& tap : model.kernel()) {
    taps.push_back(json::array({tap.offset, tap.coefficient}));
  }
  return taps;
}

CrosstalkModel crosstalk_from_json(const json& j) {
  std::vector<CrosstalkModel::Tap> taps;
  for (const auto& entry : j) {
    if (!entry.is_array() || entry.size() != 2) {
      throw InvalidParameter("crosstalk kernel entries must be [offset, coefficient] pairs");
    }
    taps.push_back({entry[0].get<int>(), entry[1].get<double>()});
  }
  return CrosstalkModel(std::move(taps));
}

json device_to_json(const Device& dev) {
  json j;
  j["schema_version"] = kDeviceSchemaVersion;
  j["kind"] = dev.kind();
  j["n_modes"] = dev.n_modes();
  j["n_layers"] = dev.n_layers();
  j["crosstalk"] = dev.crosstalk() ? crosstalk_to_json(*dev.crosstalk()) : json(nullptr);
  if (dev.provenance()) {
    j["rng"] = {{"seed", dev.provenance()->seed}, {"stream_id", dev.provenance()->stream_id}};
  } else {
    j["rng"] = nullptr;
  }

  if (const auto* mplc = dynamic_cast<const MplcDevice*>(&dev)) {
    j["include_output_phases"] = mplc->include_output_phases();
    json mixers = json::array();
    for (int i = 0; i < dev.mixer_count(); ++i) {
      const ComplexMatrix& a = dev.mixer(i);
      json entries = json::array();
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
          entries.push_back(json::array({a(r, c).real(), a(r, c).imag()}));
        }
      }
      mixers.push_back(std::move(entries));
    }
    j["mixers"] = std::move(mixers);
  }
  return j;
}

std::unique_ptr<Device> device_from_json(const json& j) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kDeviceSchemaVersion) {
    throw InvalidParameter("device file: unsupported schema_version");
  }
  const std::string kind = j.at("kind").get<std::string>();
  const Eigen::Index n = j.at("n_modes").get<Eigen::Index>();
  const Eigen::Index m = j.at("n_layers").get<Eigen::Index>();

  std::optional<CrosstalkModel> crosstalk;
  if (j.contains("crosstalk") && !j["crosstalk"].is_null()) {
    crosstalk = crosstalk_from_json(j["crosstalk"]);
  }
  std::optional<RngProvenance> prov;
  if (j.contains("rng") && !j["rng"].is_null()) {
    prov = RngProvenance{j["rng"].at("seed").get<std::uint64_t>(),
                         j["rng"].at("stream_id").get<std::uint64_t>()};
  }

  if (kind == "clements") {
    return std::make_unique<ClementsDevice>(n, m, std::move(crosstalk));
  }
  if (kind != "mplc") {
    throw InvalidParameter("device file: unknown kind '" + kind + "'");
  }

  const bool output_phases = j.at("include_output_phases").get<bool>();
  const auto& mixers_json = j.at("mixers");
  if (static_cast<Eigen::Index>(mixers_json.size()) != m) {
    throw InvalidParameter("device file: mixer count does not match n_layers");
  }
  std::vector<ComplexMatrix> mixers;
  mixers.reserve(mixers_json.size());
  for (const auto& entries : mixers_json) {
    if (static_cast<Eigen::Index>(entries.size()) != n * n) {
      throw InvalidParameter("device file: mixer entry count must be n_modes^2");
    }
    ComplexMatrix a(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c, ++idx) {
        const auto& pair = entries[static_cast<std::size_t>(idx)];
        a(r, c) = Complex(pair.at(0).get<double>(), pair.at(1).get<double>());
      }
    }
    mixers.push_back(std::move(a));
  }
  return std::make_unique<MplcDevice>(n, std::move(mixers), output_phases, std::move(crosstalk),
                                      std::move(prov));
}

void save_device(const Device& dev, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_device: cannot open " + path.string());
  out << device_to_json(dev).dump(2) << '\n';
}

std::unique_ptr<Device> load_device(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_device: cannot open " + path.string());
  json j;
  in >> j;
  return device_from_json(j);
}

}  // namespace umesh
