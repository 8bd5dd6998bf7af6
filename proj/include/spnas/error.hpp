#pragma once

#include <stdexcept>
#include <string>

namespace spnas {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// that the CLI prints as the machine-parseable part of its error line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SPNAS_DEFINE_ERROR(Name, tag)                                              \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& what) : Error(tag, what) {}               \
    };

SPNAS_DEFINE_ERROR(DimensionError, "dimension")
SPNAS_DEFINE_ERROR(ContractError, "contract")
SPNAS_DEFINE_ERROR(TrainingError, "training")
SPNAS_DEFINE_ERROR(EncodingError, "encoding")
SPNAS_DEFINE_ERROR(VocabularyError, "vocabulary")
SPNAS_DEFINE_ERROR(MissingDataError, "missing_data")
SPNAS_DEFINE_ERROR(StateError, "state")
SPNAS_DEFINE_ERROR(LoadError, "load")
SPNAS_DEFINE_ERROR(ConfigError, "config")
SPNAS_DEFINE_ERROR(AnalysisError, "analysis")
SPNAS_DEFINE_ERROR(IoError, "io")

#undef SPNAS_DEFINE_ERROR

} // namespace spnas
