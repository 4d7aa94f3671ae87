#include <doctest.h>

#include <sstream>

#include "cola/cdm.hpp"
#include "support/cdm_writer.hpp"
#include "support/rng.hpp"

using namespace cola;

namespace {

const char* kSample = R"(CCSDS_CDM_VERS = 1.0
COMMENT screening run 42
CREATION_DATE = 2025-02-28T06:30:00.000
TCA = 2025-03-01T12:00:00.000
MISS_DISTANCE = 1000.0 [m]

OBJECT = OBJECT1
OBJECT_DESIGNATOR = 99901
REF_FRAME = EME2000
X = 6928.137 [km]
Y = 0.0 [km]
Z = 0.0 [km]
X_DOT = 0.0 [km/s]
Y_DOT = 4.56486 [km/s]
Z_DOT = 6.05766 [km/s]
COMMENT covariance in RTN
CR_R = 6400.0 [m**2]
CT_R = 0.0 [m**2]
CT_T = 90000.0 [m**2]
CN_R = 0.0 [m**2]
CN_T = 0.0 [m**2]
CN_N = 3600.0 [m**2]
HARD_BODY_RADIUS = 5.0 [m]

OBJECT = OBJECT2
OBJECT_DESIGNATOR = 88802
REF_FRAME = EME2000
X = 6927.137 [km]
Y = 0.0 [km]
Z = 0.0 [km]
X_DOT = 0.0 [km/s]
Y_DOT = -4.56486 [km/s]
Z_DOT = -6.05766 [km/s]
CR_R = 160000.0 [m**2]
CT_R = 0.0 [m**2]
CT_T = 2250000.0 [m**2]
CN_R = 0.0 [m**2]
CN_T = 0.0 [m**2]
CN_N = 90000.0 [m**2]
HARD_BODY_RADIUS = 5.0 [m]
)";

std::string remove_line_containing(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " ", 0) == 0 || line.rfind(key + "=", 0) == 0) continue;
        out += line + "\n";
    }
    return out;
}

} // namespace

TEST_CASE("epoch parse/format round-trip") {
    const Epoch e = parse_epoch("2025-03-01T12:00:00.000");
    CHECK(format_epoch(e) == "2025-03-01T12:00:00.000");
    const Epoch j2000 = parse_epoch("2000-01-01T00:00:00.000");
    CHECK(j2000.seconds_since_reference == 0.0);
    const Epoch later = parse_epoch("2000-01-02T01:02:03.250");
    CHECK(later.seconds_since_reference == doctest::Approx(86400.0 + 3723.25));
}

TEST_CASE("parse_cdm: direct field echo and unit handling") {
    const CdmMessage msg = parse_cdm(kSample);
    CHECK(msg.tca == parse_epoch("2025-03-01T12:00:00.000"));
    CHECK(msg.creation_date < msg.tca);
    REQUIRE(msg.miss_distance.has_value());
    CHECK(*msg.miss_distance == 1000.0);
    CHECK(msg.objects[0].designator == "99901");
    CHECK(msg.objects[0].state.position.x() == doctest::Approx(6.928137e6));
    CHECK(msg.objects[0].state.velocity.y() == doctest::Approx(4564.86));
    CHECK(msg.objects[0].state.epoch == msg.tca);
    CHECK(msg.objects[1].position_covariance_rtn(1, 1) == doctest::Approx(2.25e6));
    CHECK(msg.objects[0].hard_body_radius_contribution == 5.0);
}

TEST_CASE("parse_cdm: every mandatory key deletion reports MissingKey") {
    const char* header_keys[] = {"CREATION_DATE", "TCA"};
    for (const char* key : header_keys) {
        const std::string text = remove_line_containing(kSample, key);
        CHECK_THROWS_WITH_AS((void)parse_cdm(text), doctest::Contains(key), Error);
    }
    const char* object_keys[] = {"OBJECT_DESIGNATOR", "REF_FRAME", "X", "Y", "Z",
                                 "X_DOT", "Y_DOT", "Z_DOT", "CR_R", "CT_R",
                                 "CT_T", "CN_R", "CN_T", "CN_N"};
    for (const char* key : object_keys) {
        const std::string text = remove_line_containing(kSample, key);
        try {
            (void)parse_cdm(text);
            FAIL("expected MissingKey for ", key);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingKey);
            CHECK(std::string(e.what()).find(key) != std::string::npos);
        }
    }
}

TEST_CASE("parse_cdm: comments and blank lines are ignored") {
    std::istringstream in(kSample);
    std::string interleaved, line;
    while (std::getline(in, line)) {
        interleaved += line + "\nCOMMENT noise\n\n";
    }
    const CdmMessage a = parse_cdm(kSample);
    const CdmMessage b = parse_cdm(interleaved);
    CHECK(a.objects[0].state.position == b.objects[0].state.position);
    CHECK(a.objects[1].position_covariance_rtn == b.objects[1].position_covariance_rtn);
}

TEST_CASE("parse_cdm: error taxonomy") {
    CHECK_THROWS_WITH_AS((void)parse_cdm(std::string(kSample) + "TCA = 2025-03-01T12:00:00\n"),
                         doctest::Contains("DuplicateKey"), Error);
    CHECK_THROWS_WITH_AS((void)parse_cdm("CREATION_DATE\n"), doctest::Contains("MalformedLine"),
                         Error);
    {
        std::string text = kSample;
        const auto pos = text.find("EME2000");
        text.replace(pos, 7, "ITRF-97");
        try {
            (void)parse_cdm(text);
            FAIL("expected UnsupportedFrame");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnsupportedFrame);
        }
    }
    {
        // Strongly indefinite covariance: off-diagonal exceeding the diagonal.
        std::string text = kSample;
        const auto pos = text.find("CT_R = 0.0");
        text.replace(pos, 10, "CT_R = 1e9");
        try {
            (void)parse_cdm(text);
            FAIL("expected NonPsdCovariance");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonPsdCovariance);
        }
    }
    // TCA before CREATION_DATE violates the message invariant.
    {
        std::string text = kSample;
        const auto pos = text.find("TCA = 2025-03-01");
        text.replace(pos, std::string("TCA = 2025-03-01T12:00:00.000").size(),
                     "TCA = 2025-02-01T00:00:00.000");
        CHECK_THROWS_AS((void)parse_cdm(text), Error);
    }
}

TEST_CASE("parse_cdm: near-PSD covariances are clamped") {
    // Rank-deficient with a tiny negative eigenvalue after round-off.
    std::string text = kSample;
    auto replace_value = [&](const std::string& key, const std::string& value) {
        const auto pos = text.find(key + " = ");
        const auto end = text.find('\n', pos);
        text.replace(pos, end - pos, key + " = " + value);
    };
    replace_value("CR_R", "100.0");
    replace_value("CT_R", "99.9999999999");
    replace_value("CT_T", "100.0");
    const CdmMessage msg = parse_cdm(text);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(msg.objects[0].position_covariance_rtn);
    CHECK(eig.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("serialize/parse round-trip is the identity") {
    const CdmMessage msg = parse_cdm(kSample);
    const CdmMessage again = parse_cdm(testing::serialize_cdm(msg));
    CHECK(again.tca == msg.tca);
    CHECK(again.creation_date == msg.creation_date);
    CHECK(*again.miss_distance == *msg.miss_distance);
    for (int i = 0; i < 2; ++i) {
        CHECK(again.objects[i].designator == msg.objects[i].designator);
        CHECK((again.objects[i].state.position - msg.objects[i].state.position).norm() == 0.0);
        CHECK((again.objects[i].state.velocity - msg.objects[i].state.velocity).norm() == 0.0);
        CHECK((again.objects[i].position_covariance_rtn -
               msg.objects[i].position_covariance_rtn)
                  .norm() < 1e-12 * msg.objects[i].position_covariance_rtn.norm());
        CHECK(again.objects[i].hard_body_radius_contribution ==
              msg.objects[i].hard_body_radius_contribution);
    }
}

TEST_CASE("rtn_basis: axis-aligned case and rotation properties") {
    StateVector s;
    s.position = Vec3(7e6, 0, 0);
    s.velocity = Vec3(0, 7500, 0);
    const Mat3 q = rtn_basis(s);
    CHECK((q - Mat3::Identity()).norm() < 1e-15);

    testing::Rng rng(17);
    for (int i = 0; i < 25; ++i) {
        StateVector r;
        r.position = rng.normal_vector(3).normalized() * 7e6;
        r.velocity = rng.normal_vector(3).normalized() * 7.5e3;
        if (r.position.cross(r.velocity).norm() < 1e3) continue;
        const Mat3 basis = rtn_basis(r);
        CHECK((basis * basis.transpose() - Mat3::Identity()).norm() < 1e-12);
        CHECK(basis.determinant() == doctest::Approx(1.0).epsilon(1e-12));

        // Gram-Schmidt oracle.
        const Vec3 e1 = r.position.normalized();
        const Vec3 e2 = (r.velocity - r.velocity.dot(e1) * e1).normalized();
        const Vec3 e3 = e1.cross(e2);
        CHECK((basis.row(0).transpose() - e1).norm() < 1e-12);
        CHECK((basis.row(1).transpose() - e2).norm() < 1e-12);
        CHECK((basis.row(2).transpose() - e3).norm() < 1e-12);
    }

    StateVector degenerate;
    degenerate.position = Vec3(7e6, 0, 0);
    degenerate.velocity = Vec3(7.5e3, 0, 0);
    CHECK_THROWS_WITH_AS((void)rtn_basis(degenerate), doctest::Contains("DegenerateState"), Error);
}

TEST_CASE("covariance_to_eci: isotropy, spectrum preservation, axis permutation") {
    StateVector s;
    s.position = Vec3(0, 7e6, 0);
    s.velocity = Vec3(0, 0, 7.5e3);

    CHECK((covariance_to_eci(Mat3::Identity(), s) - Mat3::Identity()).norm() < 1e-14);

    testing::Rng rng(29);
    for (int i = 0; i < 10; ++i) {
        const Mat3 cov = rng.spd(3, 0.2);
        const Mat3 out = covariance_to_eci(cov, s);
        Eigen::SelfAdjointEigenSolver<Mat3> in_eig(cov), out_eig(out);
        CHECK((in_eig.eigenvalues() - out_eig.eigenvalues()).norm() <
              1e-12 * cov.norm());
        CHECK((out - out.transpose()).norm() < 1e-14 * out.norm());
    }

    // R is +y, T is +z, N is +x: diag(a,b,c) in RTN lands as diag(c,a,b).
    const Mat3 diag = Vec3(1.0, 2.0, 3.0).asDiagonal();
    const Mat3 q = rtn_basis(s);
    const Mat3 oracle = q.transpose() * diag * q;
    const Mat3 out = covariance_to_eci(diag, s);
    CHECK((out - oracle).norm() < 1e-14);
    CHECK(out(0, 0) == doctest::Approx(3.0));
    CHECK(out(1, 1) == doctest::Approx(1.0));
    CHECK(out(2, 2) == doctest::Approx(2.0));
}
