#pragma once

#include <string>
#include <optional>

#include "cola/errors.hpp"
#include "cola/state.hpp"

namespace cola {

// One object section of a conjunction data message. State is the object's
// ECI (EME2000) state at TCA; the position covariance is kept in the RTN
// frame as read from the message.
struct CdmObject {
    std::string designator;
    StateVector state;
    Mat3 position_covariance_rtn = Mat3::Zero(); // m^2
    double hard_body_radius_contribution = 5.0;  // m
};

struct CdmMessage {
    Epoch creation_date;
    Epoch tca;
    std::optional<double> miss_distance; // m
    CdmObject objects[2];
};

// Parses the KVN subset:
//   KEY = VALUE [unit]
// with COMMENT lines and blank lines permitted, OBJECT = OBJECT1/OBJECT2
// section markers, km / km/s state units and m^2 covariance units.
// Unknown keys are ignored. Covariances are repaired to PSD when eigenvalues
// are within -1e-9*trace of zero; anything more negative is rejected.
CdmMessage parse_cdm(const std::string& text);

// Rotation whose rows are the radial, transverse and normal unit vectors in
// ECI; maps ECI vectors to RTN components.
Mat3 rtn_basis(const StateVector& state);

// Q^T * cov_rtn * Q with Q = rtn_basis(state).
Mat3 covariance_to_eci(const Mat3& cov_rtn, const StateVector& state);

// ISO-8601 epoch helpers for the continuous timescale used throughout
// (reference instant 2000-01-01T00:00:00).
Epoch parse_epoch(const std::string& iso);
std::string format_epoch(const Epoch& epoch);

} // namespace cola
