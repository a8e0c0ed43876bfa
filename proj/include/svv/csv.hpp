#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace svv {

// Shortest decimal string that round-trips to the same double; independent
// of locale, so output bytes are reproducible across environments.
inline std::string format_double(double v) {
  char buf[32];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

// Numeric table with a text header row.  Files are written in binary mode
// with LF line endings only, so identical data gives identical bytes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    if (row.size() != header.size())
      throw std::invalid_argument("CsvTable: row width does not match header");
    rows.push_back(std::move(row));
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += ',';
      out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format_double(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& file) const {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("CsvTable: cannot open " + file.string());
    const std::string body = to_string();
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) throw std::runtime_error("CsvTable: write failed for " + file.string());
  }
};

inline void write_text_file(const std::filesystem::path& file, const std::string& body) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("write_text_file: cannot open " + file.string());
  os.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!os) throw std::runtime_error("write_text_file: write failed for " + file.string());
}

}  // namespace svv
