#pragma once

// JSON-lines episode transcripts. One object per episode:
//
//   {"algorithm":"PPO","setting":"Kill1","seed":20240521,"episode":0,
//    "kill_mask":[1,0,1,1],"actions":[[12.5,-3.1,0.4,30.0],...],
//    "length":2,"reward":1.0,"detected":true,"truncated":false}
//
// Continuous actions are degrees as commanded (before clipping); discrete
// actions are indices in [0, 8). Keys are always written in this order.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "limbrl/episode.hpp"
#include "limbrl/error.hpp"
#include "limbrl/evaluation.hpp"

namespace limbrl {

inline std::string transcript_line(Algorithm algorithm, KillSetting setting, std::uint64_t seed,
                                   const EpisodeLog& log) {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(algorithm);
  j["setting"] = to_string(setting);
  j["seed"] = seed;
  j["episode"] = log.episode;
  auto mask = nlohmann::ordered_json::array();
  for (bool live : log.mask.live) mask.push_back(live ? 1 : 0);
  j["kill_mask"] = mask;
  auto actions = nlohmann::ordered_json::array();
  if (!log.continuous_actions.empty()) {
    for (const auto& a : log.continuous_actions) actions.push_back({a[0], a[1], a[2], a[3]});
  } else {
    for (int a : log.discrete_actions) actions.push_back(a);
  }
  j["actions"] = actions;
  j["length"] = log.length;
  j["reward"] = log.reward;
  j["detected"] = log.detected;
  j["truncated"] = log.truncated;
  return j.dump();
}

inline EpisodeRecord parse_transcript_line(const std::string& line, const std::string& run_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    EpisodeRecord r;
    r.run_id = run_id;
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.setting = parse_kill_setting(j.at("setting").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episode = j.at("episode").get<int>();
    r.length = j.at("length").get<int>();
    r.detected = j.at("detected").get<bool>();
    if (r.length < 1) throw MissingData("episode length must be >= 1");
    if (j.at("actions").size() != static_cast<std::size_t>(r.length))
      throw MissingData("action count does not match episode length");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw MissingData(std::string("malformed transcript line: ") + e.what());
  } catch (const ConfigError& e) {
    throw MissingData(std::string("malformed transcript line: ") + e.what());
  }
}

inline std::vector<EpisodeRecord> read_transcript(const std::string& path, const std::string& run_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingData("cannot open transcript '" + path + "'");
  std::vector<EpisodeRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_transcript_line(line, run_id));
  }
  return out;
}

// 64-bit FNV-1a; stable across platforms and releases.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

}  // namespace limbrl
