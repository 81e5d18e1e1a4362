#pragma once

// Parameter checkpoints as plain text. Layout (version 1):
//
//   limbrl-checkpoint 1
//   network <name> <num_layers>
//   layer <inputs> <outputs> <tanh|identity>      (num_layers lines)
//   params <count>
//   <one C99 hex-float per line>                  (count lines)
//   vector <name> <count>
//   <one hex-float per line>
//   end
//
// Hex floats round-trip every bit of a double. Networks and vectors may
// appear in any order and any number.

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "limbrl/error.hpp"
#include "limbrl/neural.hpp"

namespace limbrl {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, Network> networks;
  std::map<std::string, Eigen::VectorXd> vectors;
};

namespace detail {

inline void write_values(std::ostream& out, const Eigen::VectorXd& v) {
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%a\n", v[i]);
    out << buf;
  }
}

inline Eigen::VectorXd read_values(std::istream& in, std::size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> tok)) throw ConfigError("checkpoint: truncated value list");
    char* end = nullptr;
    v[static_cast<Eigen::Index>(i)] = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ConfigError("checkpoint: malformed value '" + tok + "'");
  }
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "limbrl-checkpoint " << kCheckpointVersion << "\n";
  for (const auto& [name, net] : ckpt.networks) {
    out << "network " << name << " " << net.layers().size() << "\n";
    for (const auto& l : net.layers()) out << "layer " << l.inputs << " " << l.outputs << " " << to_string(l.activation) << "\n";
    out << "params " << net.num_params() << "\n";
    detail::write_values(out, net.params());
  }
  for (const auto& [name, v] : ckpt.vectors) {
    out << "vector " << name << " " << v.size() << "\n";
    detail::write_values(out, v);
  }
  out << "end\n";
  return out.str();
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "limbrl-checkpoint") throw ConfigError("checkpoint: bad header");
  if (version != kCheckpointVersion) throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  std::string kind;
  while (in >> kind) {
    if (kind == "end") return ckpt;
    std::string name;
    std::size_t count = 0;
    if (!(in >> name >> count)) throw ConfigError("checkpoint: malformed '" + kind + "' record");
    if (kind == "network") {
      std::vector<LayerShape> shapes;
      for (std::size_t i = 0; i < count; ++i) {
        std::string tag, act;
        LayerShape s;
        if (!(in >> tag >> s.inputs >> s.outputs >> act) || tag != "layer")
          throw ConfigError("checkpoint: malformed layer record");
        s.activation = parse_activation(act);
        shapes.push_back(s);
      }
      Network net(shapes);
      std::string tag;
      std::size_t n = 0;
      if (!(in >> tag >> n) || tag != "params" || n != net.num_params())
        throw ConfigError("checkpoint: parameter count does not match layer shapes for '" + name + "'");
      net.mutable_params() = detail::read_values(in, n);
      ckpt.networks.emplace(name, std::move(net));
    } else if (kind == "vector") {
      ckpt.vectors.emplace(name, detail::read_values(in, count));
    } else {
      throw ConfigError("checkpoint: unknown record '" + kind + "'");
    }
  }
  throw ConfigError("checkpoint: missing 'end'");
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << serialize_checkpoint(ckpt);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace limbrl
