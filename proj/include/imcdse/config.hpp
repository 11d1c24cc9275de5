#pragma once
#include <json.hpp>

#include "imcdse/dataset.hpp"
#include "imcdse/device.hpp"

namespace imcdse {

using json = nlohmann::json;

void to_json(json& j, const DeviceParams& p);
void from_json(const json& j, DeviceParams& p);
void to_json(json& j, const GridSpec& g);
void from_json(const json& j, GridSpec& g);

// copy fields of `j` into the object, rejecting unknown keys
DeviceParams device_from(const json& j, DeviceParams base = {});

// number list, or {"start", "stop", "count"} for an evenly spaced axis
std::vector<double> axis_from(const json& j, const char* name);

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what);

} // namespace imcdse
