#pragma once

#include <filesystem>
#include <string>

#include "cooptrack/scene_sim.hpp"

namespace cooptrack::io {

// One directory per scene: ground_truth.csv, detections.csv, device.csv,
// gnss.csv and scene.json. `comment` becomes a '#' line atop each CSV.
void write_scene(const std::filesystem::path& dir, const sim::Scene& scene,
                 const std::string& comment = {});

// device.csv and gnss.csv may be absent; the streams are then empty. The
// occlusion mask is rebuilt from the spec in scene.json.
sim::Scene read_scene(const std::filesystem::path& dir);

}  // namespace cooptrack::io
