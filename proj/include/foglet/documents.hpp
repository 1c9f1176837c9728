#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "foglet/model.hpp"

namespace foglet {

struct DocumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// YAML (or JSON, which YAML accepts) to a JSON value. Plain scalars become
// null, booleans, integers or floats when they read as such; quoted scalars
// always stay strings. Throws DocumentError with the position on bad input.
json parse_document(const std::string& text, const std::string& origin = "<input>");
json load_document(const std::filesystem::path& path);

}  // namespace foglet
