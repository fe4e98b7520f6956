#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace metaradar {

std::string sha1_hex(std::string_view data);

/// Git blob object id of `content` (sha1 of "blob <len>\0" + content).
std::string git_blob_id(std::string_view content);

/// First 16 hex digits of sha1 over the compact JSON dump (keys sorted).
std::string config_hash(const nlohmann::json& config);

}  // namespace metaradar
