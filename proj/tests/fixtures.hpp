#pragma once

#include <string>

#include "relustab/io/system_json.hpp"

inline std::string fixture_path(const std::string& name) {
  return std::string(RELUSTAB_FIXTURE_DIR) + "/" + name + ".json";
}

inline relustab::ReluSystem fixture(const std::string& name) {
  return relustab::load_system(fixture_path(name));
}
