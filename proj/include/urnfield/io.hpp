#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace urnfield::io {

/// 17 significant digits, "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, bool>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Header line plus one line per row, '\n' terminated. Strings containing ',', '"' or
/// newlines are quoted.
std::string to_csv(const Table& t);
/// Array of objects keyed by the header.
nlohmann::json to_json(const Table& t);

/// Compact-but-indented JSON with a trailing newline.
std::string dump(const nlohmann::json& j);

/// Writes the whole file; throws IoError on failure.
void write_file(const std::string& path, const std::string& content);
/// Throws IoError if the file cannot be read.
std::string read_file(const std::string& path);
/// Parses a JSON file; throws IoError when unreadable and InvalidArgument when malformed.
nlohmann::json read_json(const std::string& path);

std::string sha256_hex(const std::string& bytes);

/// Run manifest written next to the data file. Fields under "timing" vary between
/// otherwise identical runs; everything else is deterministic.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, sha256)
  double runtime_seconds = 0.0;

  void add_output(const std::string& path, const std::string& content);
  nlohmann::json to_json() const;
};

std::string version();

}  // namespace urnfield::io
