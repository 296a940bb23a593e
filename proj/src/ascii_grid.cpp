#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "gradloc/errors.hpp"
#include "gradloc/geodata.hpp"

namespace gradloc {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

HeightGrid read_ascii_grid(std::istream& in) {
  static constexpr std::array<std::string_view, 6> kKeys = {
      "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};

  std::map<std::string, double> header;
  std::map<std::string, std::size_t> header_line;
  std::string line;
  std::size_t line_no = 0;
  std::string pending;  // first data line, already read
  std::size_t pending_line = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const std::string k = lower(key);
    if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) {
      pending = line;
      pending_line = line_no;
      break;
    }
    std::string value_tok;
    double value = 0.0;
    if (!(ls >> value_tok) || !parse_double(value_tok, value)) {
      throw ParseError(line_no, "malformed header value for '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) throw ParseError(line_no, "trailing text after '" + key + "'");
    if (header.count(k)) throw ParseError(line_no, "duplicate header '" + key + "'");
    header[k] = value;
    header_line[k] = line_no;
  }

  for (std::size_t i = 0; i < 5; ++i) {
    if (!header.count(std::string(kKeys[i]))) {
      throw ParseError(line_no, "missing header '" + std::string(kKeys[i]) + "'");
    }
  }
  const double ncols = header["ncols"];
  const double nrows = header["nrows"];
  const double cellsize = header["cellsize"];
  if (ncols < 1 || ncols != std::floor(ncols) || ncols > 1e6) {
    throw ParseError(header_line["ncols"], "ncols must be a positive integer");
  }
  if (nrows < 1 || nrows != std::floor(nrows) || nrows > 1e6) {
    throw ParseError(header_line["nrows"], "nrows must be a positive integer");
  }
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) {
    throw ParseError(header_line["cellsize"], "cellsize must be positive");
  }
  const double nodata_value =
      header.count("nodata_value") ? header["nodata_value"] : kAsciiNodata;

  GridGeometry geo;
  geo.origin = {header["xllcorner"], header["yllcorner"]};
  geo.resolution = cellsize;
  geo.width = static_cast<int>(ncols);
  geo.height = static_cast<int>(nrows);
  HeightGrid grid(geo);

  const std::size_t expected = geo.size();
  std::size_t count = 0;
  auto consume = [&](const std::string& text, std::size_t at_line) {
    std::istringstream ls(text);
    std::string tok;
    while (ls >> tok) {
      if (count >= expected) {
        throw ParseError(at_line, "more values than ncols*nrows = " +
                                      std::to_string(expected));
      }
      double v = 0.0;
      if (!parse_double(tok, v)) {
        throw ParseError(at_line, "malformed value '" + tok + "'");
      }
      if (!std::isfinite(v)) throw ParseError(at_line, "non-finite value");
      // File rows run north to south.
      const int row = static_cast<int>(count / geo.width);
      const int ix = static_cast<int>(count % geo.width);
      const int iy = geo.height - 1 - row;
      if (v != nodata_value) {
        if (v < 0.0) throw ParseError(at_line, "negative height " + tok);
        grid.set(ix, iy, v);
      }
      ++count;
    }
  };

  if (!pending.empty()) consume(pending, pending_line);
  while (std::getline(in, line)) {
    ++line_no;
    consume(line, line_no);
  }
  if (count != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) +
                                  " values, found " + std::to_string(count));
  }
  return grid;
}

void write_ascii_grid(const HeightGrid& grid, std::ostream& out,
                      double nodata_value) {
  const auto& geo = grid.geometry();
  out << "ncols " << geo.width << '\n'
      << "nrows " << geo.height << '\n'
      << "xllcorner " << format_double(geo.origin.x) << '\n'
      << "yllcorner " << format_double(geo.origin.y) << '\n'
      << "cellsize " << format_double(geo.resolution) << '\n'
      << "nodata_value " << format_double(nodata_value) << '\n';
  const std::string nodata_text = format_double(nodata_value);
  for (int iy = geo.height - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < geo.width; ++ix) {
      if (ix) out << ' ';
      out << (grid.observed(ix, iy) ? format_double(grid.at(ix, iy)) : nodata_text);
    }
    out << '\n';
  }
}

HeightGrid load_dem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return read_ascii_grid(in);
}

void save_dem(const HeightGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_ascii_grid(grid, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace gradloc
