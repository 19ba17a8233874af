#pragma once

#include "roman/model.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace roman::testing {

inline std::string instance_path(const std::string &name) {
  return std::string(ROMAN_INSTANCES) + "/" + name;
}

inline std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CompositionInstance load(const std::string &name) {
  return parse_instance(read_text(instance_path(name)));
}

inline TransitionSystem make_system(std::string id, std::vector<std::string> states, std::string initial,
                                    std::vector<std::string> finals,
                                    std::vector<Transition> transitions) {
  return TransitionSystem{std::move(id), std::move(states), std::move(initial), std::move(finals),
                          std::move(transitions)};
}

inline Transition tr(std::string from, std::string op, std::string to) {
  return Transition{std::move(from), std::move(op), std::nullopt, std::move(to)};
}

inline Transition guarded(std::string from, std::string op, std::vector<std::string> guard, std::string to) {
  return Transition{std::move(from), std::move(op), std::move(guard), std::move(to)};
}

} // namespace roman::testing
