#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace empo2 {

using Tokens = std::vector<std::string>;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's contract.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A NaN or infinity showed up where the math must stay finite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable file.
class FormatError : public Error {
 public:
  using Error::Error;
};

std::string join(const Tokens& tokens, std::string_view sep = " ");
Tokens split_ws(std::string_view text);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double x);
// Whole-string parse; throws FormatError on trailing garbage.
double parse_double(std::string_view text);

}  // namespace empo2
