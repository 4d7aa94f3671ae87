#include "cola/cdm.hpp"

#include <Eigen/Eigenvalues>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace cola {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Days from 2000-01-01 for a proleptic Gregorian civil date.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 730425; // 730425 = era days up to 2000-01-01
}

void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
    z += 730425;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

double parse_number(const std::string& v, int line_no) {
    const std::string t = trim(v);
    const char* begin = t.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(x)) {
        throw Error(ErrorCode::MalformedLine,
                    "line " + std::to_string(line_no) + ": bad numeric value '" + t + "'");
    }
    return x;
}

struct KeyScope {
    std::map<std::string, std::pair<std::string, int>> values; // key -> (value, line)

    void insert(const std::string& key, const std::string& value, int line_no) {
        if (values.count(key)) throw Error(ErrorCode::DuplicateKey, key);
        values[key] = {value, line_no};
    }
    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::pair<std::string, int> require(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw Error(ErrorCode::MissingKey, key);
        return it->second;
    }
};

Mat3 repair_psd(const Mat3& c, ErrorCode on_failure) {
    Mat3 sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
    const double tol = 1e-9 * std::max(sym.trace(), 0.0);
    Vec3 lam = eig.eigenvalues();
    for (int i = 0; i < 3; ++i) {
        if (lam[i] < -tol) {
            throw Error(on_failure,
                        "covariance eigenvalue " + std::to_string(lam[i]) + " below -1e-9*trace");
        }
        lam[i] = std::max(lam[i], 0.0);
    }
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

CdmObject build_object(const KeyScope& scope, Epoch tca) {
    CdmObject obj;
    obj.designator = scope.require("OBJECT_DESIGNATOR").first;
    const auto [frame, frame_line] = scope.require("REF_FRAME");
    if (trim(frame) != "EME2000") throw Error(ErrorCode::UnsupportedFrame, trim(frame));

    auto num = [&](const char* key) {
        const auto [v, line] = scope.require(key);
        return parse_number(v, line);
    };
    obj.state.epoch = tca;
    obj.state.position = 1e3 * Vec3(num("X"), num("Y"), num("Z"));           // km -> m
    obj.state.velocity = 1e3 * Vec3(num("X_DOT"), num("Y_DOT"), num("Z_DOT")); // km/s -> m/s

    Mat3 c;
    c(0, 0) = num("CR_R");
    c(1, 0) = c(0, 1) = num("CT_R");
    c(1, 1) = num("CT_T");
    c(2, 0) = c(0, 2) = num("CN_R");
    c(2, 1) = c(1, 2) = num("CN_T");
    c(2, 2) = num("CN_N");
    obj.position_covariance_rtn = repair_psd(c, ErrorCode::NonPsdCovariance);

    if (scope.has("HARD_BODY_RADIUS")) {
        const auto [v, line] = scope.values.at("HARD_BODY_RADIUS");
        obj.hard_body_radius_contribution = parse_number(v, line);
    }
    return obj;
}

} // namespace

Epoch parse_epoch(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double sec = 0.0;
    const std::string t = trim(iso);
    std::string body = t;
    if (!body.empty() && body.back() == 'Z') body.pop_back();
    if (std::sscanf(body.c_str(), "%d-%d-%dT%d:%d:%lf", &y, &mo, &d, &h, &mi, &sec) != 6) {
        throw Error(ErrorCode::MalformedLine, "bad epoch '" + t + "'");
    }
    const double days = static_cast<double>(days_from_civil(y, mo, d));
    return Epoch{days * 86400.0 + h * 3600.0 + mi * 60.0 + sec};
}

std::string format_epoch(const Epoch& epoch) {
    double s = epoch.seconds_since_reference;
    long day = static_cast<long>(std::floor(s / 86400.0));
    double sod = s - static_cast<double>(day) * 86400.0;
    // Guard the roll-over when seconds-of-day rounds up to a full day.
    if (sod >= 86400.0 - 5e-4) {
        ++day;
        sod = 0.0;
    }
    int y;
    unsigned mo, d;
    civil_from_days(day, y, mo, d);
    const int h = static_cast<int>(sod / 3600.0);
    const int mi = static_cast<int>((sod - h * 3600.0) / 60.0);
    const double sec = sod - h * 3600.0 - mi * 60.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%06.3f", y, mo, d, h, mi, sec);
    return buf;
}

CdmMessage parse_cdm(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    KeyScope header;
    std::array<KeyScope, 2> objects;
    int current = -1; // -1 header, 0/1 object sections

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("COMMENT", 0) == 0 &&
            (t.size() == 7 || std::isspace(static_cast<unsigned char>(t[7])))) {
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": '" + t + "'");
        }
        // Strip a trailing bracketed unit annotation.
        if (value.back() == ']') {
            const size_t open = value.rfind('[');
            if (open == std::string::npos) {
                throw Error(ErrorCode::MalformedLine,
                            "line " + std::to_string(line_no) + ": unbalanced unit bracket");
            }
            value = trim(value.substr(0, open));
            if (value.empty()) {
                throw Error(ErrorCode::MalformedLine,
                            "line " + std::to_string(line_no) + ": missing value before unit");
            }
        }

        if (key == "OBJECT") {
            if (value == "OBJECT1") current = 0;
            else if (value == "OBJECT2") current = 1;
            else throw Error(ErrorCode::MalformedLine,
                             "line " + std::to_string(line_no) + ": unknown section '" + value + "'");
            continue;
        }
        if (current < 0) header.insert(key, value, line_no);
        else objects[static_cast<size_t>(current)].insert(key, value, line_no);
    }

    CdmMessage msg;
    msg.creation_date = parse_epoch(header.require("CREATION_DATE").first);
    msg.tca = parse_epoch(header.require("TCA").first);
    if (msg.tca < msg.creation_date) {
        throw Error(ErrorCode::MalformedLine, "TCA precedes CREATION_DATE");
    }
    if (header.has("MISS_DISTANCE")) {
        const auto [v, ln] = header.values.at("MISS_DISTANCE");
        msg.miss_distance = parse_number(v, ln);
    }
    if (objects[0].values.empty()) throw Error(ErrorCode::MissingKey, "OBJECT1 section");
    if (objects[1].values.empty()) throw Error(ErrorCode::MissingKey, "OBJECT2 section");
    msg.objects[0] = build_object(objects[0], msg.tca);
    msg.objects[1] = build_object(objects[1], msg.tca);
    return msg;
}

Mat3 rtn_basis(const StateVector& state) {
    const Vec3& r = state.position;
    const Vec3 h = r.cross(state.velocity);
    if (r.norm() <= 0.0 || h.norm() <= 1e-12 * r.norm() * state.velocity.norm() ||
        h.norm() == 0.0) {
        throw Error(ErrorCode::DegenerateState, "r x v vanishes");
    }
    const Vec3 rhat = r.normalized();
    const Vec3 nhat = h.normalized();
    const Vec3 that = nhat.cross(rhat);
    Mat3 q;
    q.row(0) = rhat;
    q.row(1) = that;
    q.row(2) = nhat;
    return q;
}

Mat3 covariance_to_eci(const Mat3& cov_rtn, const StateVector& state) {
    const Mat3 repaired = repair_psd(cov_rtn, ErrorCode::NonPsdCovariance);
    const Mat3 q = rtn_basis(state);
    return q.transpose() * repaired * q;
}

} // namespace cola
