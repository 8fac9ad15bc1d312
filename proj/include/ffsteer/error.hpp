#pragma once

#include <stdexcept>
#include <string>

namespace ffsteer {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Track construction and projection.
class NonClosure : public Error { public: using Error::Error; };
class OffTrack : public Error { public: using Error::Error; };

// Plant.
class NumericalDivergence : public Error { public: using Error::Error; };
class NotAttainable : public Error { public: using Error::Error; };

// Planner.
class InfeasibleTrack : public Error { public: using Error::Error; };

// Fitting, metrics, training.
class RankDeficient : public Error { public: using Error::Error; };
class ZeroVariance : public Error { public: using Error::Error; };
class Diverged : public Error { public: using Error::Error; };

// Invalid arguments or malformed input files.
class InvalidInput : public Error { public: using Error::Error; };

}  // namespace ffsteer
