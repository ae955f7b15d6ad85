#pragma once

#include <stdexcept>
#include <string>

namespace structbias {

// Root of every error the library throws. The CLI maps the kind() onto exit
// codes: usage/io failures exit 2, everything else exits 1.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kIo,
    kParse,
    kStructure,
    kConfig,
    kContract,
    kValidation,
    kTransport,
    kProtocol,
    kData,
    kAnalysis,
    kConsistency,
  };

  Error(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

#define STRUCTBIAS_DEFINE_ERROR(Name, K)                  \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& what)               \
        : Error(Kind::K, what) {}                        \
  };

STRUCTBIAS_DEFINE_ERROR(IoError, kIo)
STRUCTBIAS_DEFINE_ERROR(ParseError, kParse)
STRUCTBIAS_DEFINE_ERROR(StructureError, kStructure)
STRUCTBIAS_DEFINE_ERROR(ConfigError, kConfig)
STRUCTBIAS_DEFINE_ERROR(ContractError, kContract)
STRUCTBIAS_DEFINE_ERROR(ValidationError, kValidation)
STRUCTBIAS_DEFINE_ERROR(TransportError, kTransport)
STRUCTBIAS_DEFINE_ERROR(ProtocolError, kProtocol)
STRUCTBIAS_DEFINE_ERROR(DataError, kData)
STRUCTBIAS_DEFINE_ERROR(AnalysisError, kAnalysis)
STRUCTBIAS_DEFINE_ERROR(ConsistencyError, kConsistency)

#undef STRUCTBIAS_DEFINE_ERROR

}  // namespace structbias
