#pragma once

// Minimal CSV writer: header row first, doubles with 17 significant digits so
// every value round-trips exactly.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include "fvqsd/error.hpp"

namespace fvqsd {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (auto h : header) field(h);
    end_row();
  }
  template <class Range>
  CsvWriter(const std::filesystem::path& path, const Range& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& h : header) field(std::string_view(h));
    end_row();
  }

  CsvWriter& field(std::string_view s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(const std::string& s) { return field(std::string_view(s)); }
  CsvWriter& field(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return field(std::string_view(buf));
  }
  CsvWriter& field(std::uint64_t v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "1" : "0")); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace fvqsd
