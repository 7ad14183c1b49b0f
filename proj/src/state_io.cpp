#include "qunet/state_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qunet/error.hpp"

namespace qunet {

namespace {

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& token, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": '" + token + "' is not a number");
  }
  return v;
}

}  // namespace

std::string format_state(const StateVector& s) {
  std::string out = "dims: ";
  const auto& dims = s.spec().dims();
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(dims[i]);
  }
  out += '\n';
  for (const Complex& a : s.amplitudes()) out += number(a.real()) + ' ' + number(a.imag()) + '\n';
  return out;
}

std::string format_states(std::span<const StateVector> states, std::span<const std::string> comments) {
  std::string out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i) out += '\n';
    if (i < comments.size() && !comments[i].empty()) out += "# " + comments[i] + '\n';
    out += format_state(states[i]);
  }
  return out;
}

std::vector<StateVector> parse_states(std::string_view text) {
  std::vector<StateVector> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  std::vector<std::size_t> dims;
  std::vector<Complex> amps;
  std::size_t expected = 0;
  std::size_t dims_line = 0;

  auto finish = [&] {
    if (dims.empty()) return;
    if (amps.size() != expected) {
      fail(ErrorCode::parse_error, "state declared on line " + std::to_string(dims_line) + " has " +
                                       std::to_string(amps.size()) + " amplitudes, expected " +
                                       std::to_string(expected));
    }
    out.push_back(make_state(SiteSpec(dims), std::move(amps)));
    dims.clear();
    amps.clear();
  };

  while (std::getline(in, raw)) {
    ++line;
    const std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    if (l.rfind("dims:", 0) == 0) {
      finish();
      dims_line = line;
      std::stringstream list(l.substr(5));
      std::string item;
      while (std::getline(list, item, ',')) {
        const std::string t = trim(item);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
        if (t.empty() || end != t.c_str() + t.size() || t[0] == '-') {
          fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": bad dimension '" + t + "'");
        }
        dims.push_back(static_cast<std::size_t>(v));
      }
      if (dims.empty()) fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": no dimensions");
      expected = SiteSpec(dims).total();
      amps.reserve(expected);
      continue;
    }
    if (dims.empty()) fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": amplitude before 'dims:'");
    std::istringstream pair(l);
    std::string re, im, extra;
    if (!(pair >> re >> im) || (pair >> extra)) {
      fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": expected 're im'");
    }
    if (amps.size() == expected) {
      fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": more amplitudes than the dims allow");
    }
    amps.emplace_back(parse_double(re, line), parse_double(im, line));
  }
  finish();
  if (out.empty()) fail(ErrorCode::parse_error, "no state found");
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) fail(ErrorCode::io_error, "write to '" + path + "' failed");
}

}  // namespace qunet
