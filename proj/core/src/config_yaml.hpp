#pragma once

#include <yaml-cpp/yaml.h>

#include <string>

#include "namo/config.hpp"

namespace namo::detail
{

void apply_config_node(Params &params, const YAML::Node &root, const std::string &source);

}  // namespace namo::detail
