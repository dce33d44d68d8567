#pragma once

// nlohmann/json, vendored single header.
#include <json.hpp>
