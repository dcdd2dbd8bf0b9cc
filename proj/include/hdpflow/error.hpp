#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hdpflow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input or arguments (maps to CLI exit code 1).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& reason)
        : ValidationError("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class DuplicateId : public ValidationError {
public:
    explicit DuplicateId(std::string id) : ValidationError("duplicate document id: " + id), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

#define HDPFLOW_DEFINE_ERROR(Name, Base)  \
    class Name : public Base {            \
    public:                               \
        using Base::Base;                 \
    };

HDPFLOW_DEFINE_ERROR(EmptyCorpus, ValidationError)
HDPFLOW_DEFINE_ERROR(InvalidSpec, ValidationError)
HDPFLOW_DEFINE_ERROR(EmptyAfterFiltering, ValidationError)
HDPFLOW_DEFINE_ERROR(NoDocuments, ValidationError)
HDPFLOW_DEFINE_ERROR(AllBagsEmpty, ValidationError)
HDPFLOW_DEFINE_ERROR(DimensionMismatch, ValidationError)
HDPFLOW_DEFINE_ERROR(TooFewEpochs, ValidationError)
HDPFLOW_DEFINE_ERROR(EmptyInput, ValidationError)
HDPFLOW_DEFINE_ERROR(InvalidZeta, ValidationError)
HDPFLOW_DEFINE_ERROR(NodeSetMismatch, ValidationError)
HDPFLOW_DEFINE_ERROR(UnprunedInput, ValidationError)
HDPFLOW_DEFINE_ERROR(UnprunedGraph, ValidationError)
HDPFLOW_DEFINE_ERROR(EmptyQuery, ValidationError)
HDPFLOW_DEFINE_ERROR(NoVocabularyMatch, ValidationError)
HDPFLOW_DEFINE_ERROR(UnknownNode, ValidationError)
HDPFLOW_DEFINE_ERROR(InvalidConfig, ValidationError)
HDPFLOW_DEFINE_ERROR(Cancelled, Error)

#undef HDPFLOW_DEFINE_ERROR

/// Failure inside one epoch's fit, annotated with the epoch index.
class EpochFitError : public Error {
public:
    EpochFitError(std::size_t epoch, const std::string& what)
        : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace hdpflow
