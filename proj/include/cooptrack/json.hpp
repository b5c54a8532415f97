#pragma once

#include <nlohmann/json.hpp>

namespace cooptrack {
using Json = nlohmann::json;
}
