// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "socattn/scene_model.hpp"

namespace socattn::harness {

inline constexpr int kSceneFormatVersion = 1;

/// Scene file: visual tokens first, then `other_text_len` prompt tokens, then
/// the utterance tokens in file order. Unknown keys are rejected.
Scene scene_from_json(const nlohmann::json& doc);
nlohmann::ordered_json scene_to_json(const Scene& scene);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);

/// Sequence block of an attention dump manifest. Unlike the scene file it
/// carries explicit token positions, since real models interleave prompt text
/// and visual tokens.
Scene sequence_from_json(const nlohmann::json& doc);
nlohmann::ordered_json sequence_to_json(const Scene& scene);

/// Reads and parses a JSON document (E_IO if unreadable, E_SCENE if malformed).
nlohmann::json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace socattn::harness
