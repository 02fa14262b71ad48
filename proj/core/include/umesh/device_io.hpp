#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>

#include "umesh/devices.hpp"

namespace umesh {

inline constexpr int kDeviceSchemaVersion = 1;

/// Device file schema: {schema_version, kind, n_modes, n_layers,
/// include_output_phases, crosstalk (kernel taps or null), mixers as
/// row-major [re, im] pairs, rng (seeds used to sample the mixers) or null}.
/// Round-trips bit-exactly.
nlohmann::json device_to_json(const Device& dev);
std::unique_ptr<Device> device_from_json(const nlohmann::json& j);

void save_device(const Device& dev, const std::filesystem::path& path);
std::unique_ptr<Device> load_device(const std::filesystem::path& path);

nlohmann::json crosstalk_to_json(const CrosstalkModel& model);
CrosstalkModel crosstalk_from_json(const nlohmann::json& j);

}  // namespace umesh
