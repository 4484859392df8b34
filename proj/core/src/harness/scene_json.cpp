// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/scene_json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "socattn/error.hpp"

namespace socattn::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorCode::kScene, message); }

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) fail(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) fail("unknown field '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

std::size_t as_count(const json& v, const std::string& what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(what + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& what) {
  if (!v.is_number()) fail(what + " must be a number");
  return v.get<double>();
}

SpeakerId as_speaker(const json& v, const std::string& what) {
  if (v.is_string()) return SpeakerId{v.get<std::string>()};
  if (v.is_number_integer()) return SpeakerId{std::to_string(v.get<long long>())};
  fail(what + " must be a string or integer speaker label");
}

void check_version(const json& doc, const std::string& where) {
  if (auto it = doc.find("version"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() != kSceneFormatVersion) {
      throw Error(ErrorCode::kScene, "unsupported " + where + " version " + it->dump());
    }
  }
}

// Fields shared by the scene file and the dump sequence block.
void read_common(const json& doc, Scene& scene, const std::string& where) {
  const std::size_t frames = as_count(require(doc, "frames", where), "frames");
  const auto& grid = require(doc, "grid", where);
  if (!grid.is_array() || grid.size() != 2) fail("grid must be [H, W]");
  scene.sequence.visual.frames = frames;
  scene.sequence.visual.grid_h = as_count(grid[0], "grid H");
  scene.sequence.visual.grid_w = as_count(grid[1], "grid W");

  const auto& times = require(doc, "frame_times", where);
  if (!times.is_array()) fail("frame_times must be an array");
  for (const auto& t : times) scene.sequence.frame_times.push_back(as_real(t, "frame time"));

  const auto& speakers = require(doc, "speakers", where);
  if (!speakers.is_array()) fail("speakers must be an array");
  for (const auto& s : speakers) scene.speakers.push_back(as_speaker(s, "speaker"));

  if (auto it = doc.find("boxes"); it != doc.end()) {
    if (!it->is_array()) fail("boxes must be an array");
    for (const auto& b : *it) {
      reject_unknown(b, {"speaker", "frame", "box"}, "box entry");
      const auto& coords = require(b, "box", "box entry");
      if (!coords.is_array() || coords.size() != 4) fail("box must be [x0, y0, x1, y1]");
      scene.boxes.push_back(SpeakerBox{as_speaker(require(b, "speaker", "box entry"), "box speaker"),
                                       as_count(require(b, "frame", "box entry"), "box frame"),
                                       Box{as_real(coords[0], "x0"), as_real(coords[1], "y0"),
                                           as_real(coords[2], "x1"), as_real(coords[3], "y1")}});
    }
  }
  if (auto it = doc.find("aliases"); it != doc.end()) {
    if (!it->is_object()) fail("aliases must be an object");
    for (const auto& [name, speaker] : it->items()) {
      scene.aliases.emplace(name, as_speaker(speaker, "alias target"));
    }
  }
  if (auto it = doc.find("duration"); it != doc.end()) scene.duration = as_real(*it, "duration");
}

void validate_scene(Scene& scene) {
  try {
    scene.validate();
  } catch (const ContractViolation& e) {
    fail(e.what());
  }
}

void write_common(ordered_json& out, const Scene& scene) {
  const auto& v = scene.sequence.visual;
  out["frames"] = v.frames;
  out["grid"] = ordered_json::array({v.grid_h, v.grid_w});
  out["frame_times"] = scene.sequence.frame_times;
  ordered_json speakers = ordered_json::array();
  for (const auto& s : scene.speakers) speakers.push_back(s.value);
  out["speakers"] = speakers;
  ordered_json boxes = ordered_json::array();
  for (const auto& b : scene.boxes) {
    ordered_json entry;
    entry["speaker"] = b.speaker.value;
    entry["frame"] = b.frame;
    entry["box"] = ordered_json::array({b.box.x0, b.box.y0, b.box.x1, b.box.y1});
    boxes.push_back(entry);
  }
  out["boxes"] = boxes;
  ordered_json aliases = ordered_json::object();
  for (const auto& [name, s] : scene.aliases) aliases[name] = s.value;
  out["aliases"] = aliases;
  if (scene.duration) out["duration"] = *scene.duration;
}

}  // namespace

Scene scene_from_json(const json& doc) {
  const std::string where = "scene";
  reject_unknown(doc,
                 {"version", "frames", "grid", "frame_times", "speakers", "boxes", "tokens",
                  "aliases", "other_text_len", "duration"},
                 where);
  check_version(doc, where);
  Scene scene;
  read_common(doc, scene, where);

  auto& seq = scene.sequence;
  seq.visual.base_offset = 0;
  const std::size_t other = doc.contains("other_text_len")
                                ? as_count(doc["other_text_len"], "other_text_len")
                                : 0;
  for (std::size_t k = 0; k < other; ++k) seq.other_text.push_back(seq.visual.size() + k);

  const auto& tokens = require(doc, "tokens", where);
  if (!tokens.is_array()) fail("tokens must be an array");
  std::size_t next = seq.visual.size() + other;
  for (const auto& t : tokens) {
    reject_unknown(t, {"text", "speaker", "timestamp"}, "token entry");
    const auto& text = require(t, "text", "token entry");
    if (!text.is_string()) fail("token text must be a string");
    seq.utterances.push_back(UtteranceToken{next++, text.get<std::string>(),
                                            as_speaker(require(t, "speaker", "token entry"),
                                                       "token speaker"),
                                            as_real(require(t, "timestamp", "token entry"),
                                                    "token timestamp")});
  }
  seq.total_len = next;
  validate_scene(scene);
  return scene;
}

ordered_json scene_to_json(const Scene& scene) {
  ordered_json out;
  out["version"] = kSceneFormatVersion;
  write_common(out, scene);
  out["other_text_len"] = scene.sequence.other_text.size();
  ordered_json tokens = ordered_json::array();
  for (const auto& u : scene.sequence.utterances) {
    ordered_json t;
    t["text"] = u.text;
    t["speaker"] = u.speaker.value;
    t["timestamp"] = u.timestamp;
    tokens.push_back(t);
  }
  out["tokens"] = tokens;
  return out;
}

Scene sequence_from_json(const json& doc) {
  const std::string where = "dump sequence";
  reject_unknown(doc,
                 {"seq_len", "visual_offset", "frames", "grid", "frame_times", "speakers", "boxes",
                  "utterances", "other_text", "aliases", "duration"},
                 where);
  Scene scene;
  read_common(doc, scene, where);
  auto& seq = scene.sequence;
  seq.total_len = as_count(require(doc, "seq_len", where), "seq_len");
  seq.visual.base_offset = as_count(require(doc, "visual_offset", where), "visual_offset");
  if (auto it = doc.find("other_text"); it != doc.end()) {
    if (!it->is_array()) fail("other_text must be an array");
    for (const auto& v : *it) seq.other_text.push_back(as_count(v, "other_text index"));
  }
  const auto& utterances = require(doc, "utterances", where);
  if (!utterances.is_array()) fail("utterances must be an array");
  for (const auto& u : utterances) {
    reject_unknown(u, {"index", "text", "speaker", "timestamp"}, "utterance entry");
    const auto& text = require(u, "text", "utterance entry");
    if (!text.is_string()) fail("utterance text must be a string");
    seq.utterances.push_back(
        UtteranceToken{as_count(require(u, "index", "utterance entry"), "utterance index"),
                       text.get<std::string>(),
                       as_speaker(require(u, "speaker", "utterance entry"), "utterance speaker"),
                       as_real(require(u, "timestamp", "utterance entry"), "utterance timestamp")});
  }
  validate_scene(scene);
  return scene;
}

ordered_json sequence_to_json(const Scene& scene) {
  ordered_json out;
  out["seq_len"] = scene.sequence.total_len;
  out["visual_offset"] = scene.sequence.visual.base_offset;
  write_common(out, scene);
  out["other_text"] = scene.sequence.other_text;
  ordered_json utterances = ordered_json::array();
  for (const auto& u : scene.sequence.utterances) {
    ordered_json t;
    t["index"] = u.sequence_index;
    t["text"] = u.text;
    t["speaker"] = u.speaker.value;
    t["timestamp"] = u.timestamp;
    utterances.push_back(t);
  }
  out["utterances"] = utterances;
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kScene, path.string() + ": malformed JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_json_file(path)); }

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  write_text_file(path, scene_to_json(scene).dump(2) + "\n");
}

}  // namespace socattn::harness
