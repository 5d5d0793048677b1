#pragma once

#include <string>
#include <vector>

#include "vitcod/simulator.hpp"

namespace vitcod {

struct ModelPreset {
  std::string name;
  LayerShape shape;
  std::size_t depth = 0;  // blocks at this shape
};

// deit-tiny, deit-small, deit-base, levit-128, levit-192, levit-256.
// ArgumentError for an unknown name.
const ModelPreset& preset(const std::string& name);
const std::vector<ModelPreset>& all_presets();

}  // namespace vitcod
