#ifndef LIGHTTRACK_ERRORS_HPP
#define LIGHTTRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lighttrack {

// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry
struct DegeneratePose : Error { using Error::Error; };
struct DegenerateBox : Error { using Error::Error; };
struct EmptyPose : Error { using Error::Error; };

// Skeleton graph
struct NotNeighbors : Error { using Error::Error; };
struct NoValidSamples : Error { using Error::Error; };

// Matcher / training
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct DegenerateDataset : Error { using Error::Error; };
struct MatcherUnavailable : Error { using Error::Error; };

// Tracking / providers
struct FrameOutOfRange : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct ProviderError : Error { using Error::Error; };
struct FrameMismatch : Error { using Error::Error; };

// File ingestion
struct ParseError : Error { using Error::Error; };
struct SchemaVersionError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

}  // namespace lighttrack

#endif  // LIGHTTRACK_ERRORS_HPP
