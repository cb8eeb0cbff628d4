#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ard/mdp.hpp"

namespace ard {

// Line-oriented token reader that skips blanks/comments and reports the line
// number of any malformed content.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const std::string& what) {
    std::string token;
    while (!(line_ >> token)) {
      std::string raw;
      if (!std::getline(in_, raw))
        throw std::runtime_error("unexpected end of input while reading " + what);
      ++line_number_;
      const auto first = raw.find_first_not_of(" \t\r");
      if (first == std::string::npos || raw[first] == '#') continue;
      line_.clear();
      line_.str(raw);
    }
    return token;
  }

  double next_double(const std::string& what) {
    const std::string token = next(what);
    try {
      size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_number_) +
                               ": expected a number for " + what + ", got '" +
                               token + "'");
    }
  }

  long next_int(const std::string& what) {
    const std::string token = next(what);
    try {
      size_t used = 0;
      const long value = std::stol(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_number_) +
                               ": expected an integer for " + what + ", got '" +
                               token + "'");
    }
  }

  void expect(const std::string& literal) {
    const std::string token = next("'" + literal + "'");
    if (token != literal)
      throw std::runtime_error("line " + std::to_string(line_number_) +
                               ": expected '" + literal + "', got '" + token +
                               "'");
  }

 private:
  std::istream& in_;
  std::istringstream line_;
  int line_number_ = 0;
};

// Plain-text formats.  All floating-point values are written with %.17g so
// every file round-trips bit-exactly.
//
// MDP format (whitespace separated; blank lines and '#' comments ignored):
//   ard-mdp v1
//   states <S>    actions <A>    gamma <g>    horizon <H>   (one per line)
//   section initial_dist   -> S values
//   section transition     -> S*A lines (s-major, then action) of S values
//   section base_reward    -> S lines of A values
//   section terminal_mask  -> S lines of A 0/1 flags
//   end
//
// Table format:
//   ard-table v1
//   rows <r>
//   cols <c>
//   <r lines of c values>
//   end

/** Canonical round-trippable text for a double (%.17g). */
std::string format_double(double value);

/** FNV-1a 64-bit hash. */
std::uint64_t fnv1a64(std::string_view text);

/** Hex FNV-1a hash of a vector's canonical text; stable across platforms. */
std::string hash_vector(const Eigen::VectorXd& values);

void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);
void save_mdp(const std::string& path, const TabularMdp& mdp);
TabularMdp load_mdp(const std::string& path);

void write_table(std::ostream& out, const Eigen::MatrixXd& table);
Eigen::MatrixXd read_table(std::istream& in);
void save_table(const std::string& path, const Eigen::MatrixXd& table);
Eigen::MatrixXd load_table(const std::string& path);

/** Whole-file helpers; throw std::runtime_error on I/O failure. */
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace ard
