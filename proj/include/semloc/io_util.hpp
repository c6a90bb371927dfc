#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semloc/errors.hpp"

namespace semloc {

/// Shortest round-trip decimal form of x (std::to_chars). Used for every
/// double that ends up in a text artifact so reruns are byte-identical.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);

/// Write via temp file + rename so readers never observe partial output.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

void write_binary_file_atomic(const std::filesystem::path& path, const void* data, size_t size);

/// Split on ASCII whitespace.
std::vector<std::string> split_tokens(const std::string& line);

double parse_double_token(const std::string& token, const std::string& context);
long long parse_int_token(const std::string& token, const std::string& context);

}  // namespace semloc
