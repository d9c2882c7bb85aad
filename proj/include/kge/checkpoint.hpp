#pragma once

#include <optional>
#include <string>

#include "kge/graph.hpp"
#include "kge/model.hpp"

namespace kge {

// Binary model file; layout in docs/checkpoint_format.md.
struct Checkpoint {
  Model model;
  // Absent when the model was saved without label dictionaries.
  std::optional<Dictionary> entities;
  std::optional<Dictionary> relations;
};

inline constexpr char kCheckpointMagic[8] = {'K', 'G', 'E', 'C', 'K', 'P', 'T', '1'};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace kge
