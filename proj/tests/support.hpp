#pragma once

#include "mte/config.hpp"
#include "mte/scenario.hpp"

#include <string>

namespace test {

inline std::string config_path(const std::string& name) { return std::string(MTE_CONFIG_DIR) + "/" + name + ".json"; }

inline mte::config::ScenarioConfig bundled_config(const std::string& name)
{
    return mte::config::load(config_path(name));
}

inline mte::Scenario bundled(const std::string& name) { return mte::Scenario(mte::config::build_spec(bundled_config(name))); }

} // namespace test
