#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace polite::io {

std::string read_file(const std::filesystem::path& p);
std::vector<std::string> read_lines(const std::filesystem::path& p);

// Writes via a temp file plus rename so a crash never leaves a half-written
// artifact behind.
void write_file(const std::filesystem::path& p, const std::string& content);

void append_line(const std::filesystem::path& p, const std::string& line);

// Splits on commas; fields in our files never contain commas or quotes.
std::vector<std::string> split_csv(const std::string& line);

}  // namespace polite::io
