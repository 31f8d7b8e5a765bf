#pragma once

#include <stdexcept>
#include <string>

namespace leaderaffect {

/// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file does not match the expected column layout.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Manifest rows could not be resolved against the party labels.
class JoinError : public Error {
public:
    using Error::Error;
};

class FetchError : public Error {
public:
    FetchError(const std::string& what, bool retriable) : Error(what), retriable_(retriable) {}
    bool retriable() const noexcept { return retriable_; }

private:
    bool retriable_;
};

/// Container could not be opened or yielded no usable frames.
class MediaError : public Error {
public:
    using Error::Error;
};

/// Container opened but not a single requested frame decoded.
class EmptyVideoError : public MediaError {
public:
    using MediaError::MediaError;
};

/// Model artifacts, config values or hashes do not line up. Fatal for the run.
class ConfigError : public Error {
public:
    using Error::Error;
};

class CropError : public Error {
public:
    using Error::Error;
};

/// Verification manifest refers to something that does not exist.
class ManifestError : public Error {
public:
    using Error::Error;
};

/// Statistical routine called outside its domain (too few values, zero variance, ...).
class StatsError : public Error {
public:
    using Error::Error;
};

}  // namespace leaderaffect
