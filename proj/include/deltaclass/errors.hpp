#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltaclass {

// Every error raised by the library derives from Error so callers can catch
// one type at the boundary (the CLI maps it to exit code 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedDiff : public Error {
 public:
  MalformedDiff(std::size_t line_no, const std::string& reason)
      : Error("malformed diff at line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(reason) {}
  std::size_t line_no() const { return line_no_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class UnexpectedEOF : public MalformedDiff {
 public:
  explicit UnexpectedEOF(std::size_t line_no)
      : MalformedDiff(line_no, "unexpected end of input inside hunk") {}
};

class DuplicateChangeId : public Error {
 public:
  explicit DuplicateChangeId(const std::string& id)
      : Error("duplicate change id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class ProfileMissing : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t a, std::size_t b)
      : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class TooFewVectors : public Error {
 public:
  TooFewVectors(std::size_t have, std::size_t need)
      : Error("too few vectors: have " + std::to_string(have) + ", need at least " +
              std::to_string(need)) {}
};

class InconsistentClustering : public Error {
 public:
  using Error::Error;
};

class UnknownClassName : public Error {
 public:
  explicit UnknownClassName(const std::string& name) : Error("unknown class name: " + name) {}
};

class LabelForUnknownChange : public Error {
 public:
  explicit LabelForUnknownChange(const std::string& id)
      : Error("label refers to a change that is not clustered: " + id) {}
};

class UnresolvedClusters : public Error {
 public:
  explicit UnresolvedClusters(std::vector<std::size_t> clusters)
      : Error(describe(clusters)), clusters_(std::move(clusters)) {}
  const std::vector<std::size_t>& clusters() const { return clusters_; }

 private:
  static std::string describe(const std::vector<std::size_t>& c) {
    std::string s = "unresolved clusters:";
    for (auto j : c) s += " " + std::to_string(j);
    return s;
  }
  std::vector<std::size_t> clusters_;
};

class SameExpert : public Error {
 public:
  explicit SameExpert(const std::string& id)
      : Error("verification set needs two distinct experts, got '" + id + "' twice") {}
};

class UnclusteredVerificationChange : public Error {
 public:
  explicit UnclusteredVerificationChange(const std::string& id)
      : Error("verification change is not clustered: " + id) {}
};

class EmptyVerificationSet : public Error {
 public:
  EmptyVerificationSet() : Error("verification set is empty") {}
};

class TooFewForResampling : public Error {
 public:
  TooFewForResampling(std::size_t have, std::size_t parts)
      : Error("cannot split " + std::to_string(have) + " verification changes into " +
              std::to_string(parts) + " parts") {}
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptArtifact : public Error {
 public:
  explicit CorruptArtifact(const std::string& name)
      : Error("artifact content hash mismatch: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class SessionLocked : public Error {
 public:
  using Error::Error;
};

// A verb was run before the stage it depends on.
class StageError : public Error {
 public:
  using Error::Error;
};

class AddressInUse : public Error {
 public:
  using Error::Error;
};

}  // namespace deltaclass
