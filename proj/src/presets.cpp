#include "vitcod/presets.hpp"

#include <algorithm>

#include "vitcod/errors.hpp"

namespace vitcod {

const std::vector<ModelPreset>& all_presets() {
  // DeiT: 196 patches + class token, 12 blocks, MLP ratio 4
  // (facebookresearch/deit model cards: tiny 192/3, small 384/6, base 768/12).
  // LeViT: first stage only, 14x14 = 196 tokens, MLP ratio 2, d_k = d/h
  // (facebookresearch/LeViT: 128 -> D=128 H=4, 192 -> D=192 H=3, 256 -> D=256 H=4;
  // stage-1 depths 4/4/4).
  static const std::vector<ModelPreset> presets = {
      {"deit-tiny", LayerShape::make(197, 3, 64, 768), 12},
      {"deit-small", LayerShape::make(197, 6, 64, 1536), 12},
      {"deit-base", LayerShape::make(197, 12, 64, 3072), 12},
      {"levit-128", LayerShape::make(196, 4, 32, 256), 4},
      {"levit-192", LayerShape::make(196, 3, 64, 384), 4},
      {"levit-256", LayerShape::make(196, 4, 64, 512), 4},
  };
  return presets;
}

const ModelPreset& preset(const std::string& name) {
  const auto& all = all_presets();
  const auto it = std::find_if(all.begin(), all.end(), [&](const ModelPreset& p) { return p.name == name; });
  if (it == all.end()) throw ArgumentError("unknown preset '" + name + "'");
  return *it;
}

}  // namespace vitcod
