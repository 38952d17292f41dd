#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eaagent {

// Error families map 1:1 onto CLI exit codes: config=1, data=2, backend=3.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parse errors carry the 1-based physical line number of the offending line.
class MalformedLineError : public DataError {
public:
    MalformedLineError(std::size_t line_no, const std::string& detail)
        : DataError("line " + std::to_string(line_no) + ": " + detail), line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class DuplicateSourceError : public DataError {
public:
    DuplicateSourceError(std::size_t line_no, const std::string& source)
        : DataError("line " + std::to_string(line_no) + ": duplicate source entity " + source),
          line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class EmptyLinksError : public DataError {
public:
    EmptyLinksError() : DataError("no alignment links to split") {}
};

class UnknownEntityError : public DataError {
public:
    explicit UnknownEntityError(const std::string& iri)
        : DataError("unknown entity: " + iri) {}
};

class UnknownAttributeError : public DataError {
public:
    explicit UnknownAttributeError(const std::string& iri)
        : DataError("attribute not present in entropy scope: " + iri) {}
};

class EmptyGraphError : public DataError {
public:
    EmptyGraphError() : DataError("graph has no relation triples") {}
};

class MalformedRecordError : public DataError {
public:
    MalformedRecordError(std::size_t line_no, const std::string& detail)
        : DataError("record " + std::to_string(line_no) + ": " + detail), line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class ScoreOutOfRangeError : public DataError {
public:
    ScoreOutOfRangeError(std::size_t line_no, double score)
        : DataError("record " + std::to_string(line_no) + ": candidate score " +
                    std::to_string(score) + " outside [0, 1]"),
          line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class EmptyCandidatesError : public DataError {
public:
    explicit EmptyCandidatesError(const std::string& source)
        : DataError("no candidates for entity " + source) {}
};

class EmptyDatasetError : public DataError {
public:
    EmptyDatasetError() : DataError("trajectory dataset is empty") {}
};

class MissingPlaceholderError : public DataError {
public:
    explicit MissingPlaceholderError(const std::string& name)
        : DataError("no value for template placeholder {" + name + "}"), placeholder_(name) {}
    const std::string& placeholder() const noexcept { return placeholder_; }

private:
    std::string placeholder_;
};

// Plan parsing failures. The planner's repair loop catches the base class.
class PlanParseError : public DataError {
public:
    using DataError::DataError;
};

class NoToolLinesError : public PlanParseError {
public:
    NoToolLinesError() : PlanParseError("no numbered tool lines in response") {}
};

class UnknownToolError : public PlanParseError {
public:
    explicit UnknownToolError(const std::string& name)
        : PlanParseError("unknown tool name: " + name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

enum class PathDefect {
    length,
    duplicate_tool,
    missing_alignment_tool,
    missing_selector,
    reflector_misplaced,
    selector_misplaced,
};

const char* to_string(PathDefect defect);

class InvalidPathError : public PlanParseError {
public:
    explicit InvalidPathError(PathDefect defect)
        : PlanParseError(std::string("invalid tool path: ") + to_string(defect)),
          defect_(defect) {}
    PathDefect defect() const noexcept { return defect_; }

private:
    PathDefect defect_;
};

// Alignment answer parsing failures. One retry, then a deterministic fallback.
class AnswerParseError : public DataError {
public:
    using DataError::DataError;
};

class NoAnswerError : public AnswerParseError {
public:
    NoAnswerError() : AnswerParseError("response names no candidate") {}
};

class NotACandidateError : public AnswerParseError {
public:
    explicit NotACandidateError(const std::string& iri)
        : AnswerParseError("answer is not a candidate: " + iri) {}
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class BackendRefusalError : public BackendError {
public:
    BackendRefusalError(int status, const std::string& body)
        : BackendError("backend refused request (HTTP " + std::to_string(status) + "): " + body),
          status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class BudgetExceededError : public BackendError {
public:
    BudgetExceededError(std::size_t used, std::size_t budget)
        : BackendError("token budget exhausted: " + std::to_string(used) + " of " +
                       std::to_string(budget) + " used") {}
};

// Raised by the oracle mock, which cannot answer without a label.
class MissingGoldError : public BackendError {
public:
    explicit MissingGoldError(const std::string& iri)
        : BackendError("no gold target for entity " + iri) {}
};

// Raised by evaluation when an outcome's source has no gold link.
class MissingGoldLinkError : public DataError {
public:
    explicit MissingGoldLinkError(const std::string& iri)
        : DataError("no gold link for entity " + iri) {}
};

}  // namespace eaagent
