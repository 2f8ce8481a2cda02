#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lyricmatch {

// Base class for every domain error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based when known, 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class InsufficientCorpus : public Error {
 public:
  using Error::Error;
};

class EmptyReference : public Error {
 public:
  using Error::Error;
};

class VocabularyMismatch : public Error {
 public:
  using Error::Error;
};

class MissingVocabulary : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateBatch : public Error {
 public:
  using Error::Error;
};

class InsufficientGroups : public Error {
 public:
  using Error::Error;
};

class TooFewGroups : public Error {
 public:
  using Error::Error;
};

class UnknownRelevant : public Error {
 public:
  using Error::Error;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyricmatch
