#include "cola/conic/dump.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace cola::conic {

namespace {

const char* cone_tag(ConeKind kind) {
    switch (kind) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Nonneg: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::Psd: return "psd";
    }
    return "?";
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::MalformedLine, "problem dump: " + what);
}

} // namespace

void write_problem(const ConicProblem& problem, std::ostream& out) {
    char buf[64];
    out << "conic-problem v1\n";
    out << "vars " << problem.num_vars() << "\n";
    out << "rows " << problem.num_rows() << "\n";
    for (const auto& blk : problem.cone_spec) {
        out << "cone " << cone_tag(blk.kind) << " " << blk.dim << "\n";
    }
    out << "objective\n";
    for (int i = 0; i < problem.num_vars(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d %.17g\n", i, problem.objective[i]);
        out << buf;
    }
    out << "rhs\n";
    for (int i = 0; i < problem.num_rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d %.17g\n", i, problem.rhs[i]);
        out << buf;
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < problem.constraint_matrix.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(problem.constraint_matrix, k); it;
             ++it) {
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    }
    out << "matrix " << trips.size() << "\n";
    for (const auto& t : trips) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", t.row(), t.col(), t.value());
        out << buf;
    }
    out << "end\n";
}

ConicProblem read_problem(std::istream& in) {
    std::string line;
    auto next = [&]() {
        if (!std::getline(in, line)) malformed("unexpected end of input");
        return line;
    };
    if (next() != "conic-problem v1") malformed("bad header");

    ConicProblem p;
    int n = -1, m = -1;
    {
        std::istringstream ls(next());
        std::string tag;
        if (!(ls >> tag >> n) || tag != "vars" || n < 0) malformed("bad vars line");
    }
    {
        std::istringstream ls(next());
        std::string tag;
        if (!(ls >> tag >> m) || tag != "rows" || m < 0) malformed("bad rows line");
    }
    p.objective = Eigen::VectorXd::Zero(n);
    p.rhs = Eigen::VectorXd::Zero(m);

    while (true) {
        next();
        if (line == "objective") break;
        std::istringstream ls(line);
        std::string tag, kind;
        int dim = 0;
        if (!(ls >> tag >> kind >> dim) || tag != "cone") malformed("bad cone line '" + line + "'");
        ConeKind k;
        if (kind == "zero") k = ConeKind::Zero;
        else if (kind == "nonneg") k = ConeKind::Nonneg;
        else if (kind == "soc") k = ConeKind::SecondOrder;
        else if (kind == "psd") k = ConeKind::Psd;
        else malformed("unknown cone '" + kind + "'");
        p.cone_spec.push_back({k, dim});
    }
    for (int i = 0; i < n; ++i) {
        std::istringstream ls(next());
        int idx;
        double v;
        if (!(ls >> idx >> v) || idx != i) malformed("bad objective entry");
        p.objective[i] = v;
    }
    if (next() != "rhs") malformed("expected rhs section");
    for (int i = 0; i < m; ++i) {
        std::istringstream ls(next());
        int idx;
        double v;
        if (!(ls >> idx >> v) || idx != i) malformed("bad rhs entry");
        p.rhs[i] = v;
    }
    int nnz = -1;
    {
        std::istringstream ls(next());
        std::string tag;
        if (!(ls >> tag >> nnz) || tag != "matrix" || nnz < 0) malformed("bad matrix line");
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz);
    for (int t = 0; t < nnz; ++t) {
        std::istringstream ls(next());
        int r, c;
        double v;
        if (!(ls >> r >> c >> v)) malformed("bad triplet");
        trips.emplace_back(r, c, v);
    }
    if (next() != "end") malformed("missing end marker");
    p.constraint_matrix.resize(m, n);
    p.constraint_matrix.setFromTriplets(trips.begin(), trips.end());
    return p;
}

void write_problem_file(const ConicProblem& problem, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
    write_problem(problem, out);
}

ConicProblem read_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    return read_problem(in);
}

} // namespace cola::conic
