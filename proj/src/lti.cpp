#include "mflqr/lti.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace mflqr {

namespace {

bool all_finite(const Matrix& M) { return M.allFinite(); }

} // namespace

LtiSystem::LtiSystem(Matrix A_, Matrix B_, Matrix C_, Matrix D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
    require(A.rows() == A.cols(), "LtiSystem: A must be square");
    require(A.rows() > 0 && B.cols() > 0, "LtiSystem: n and m must be positive");
    require(B.rows() == A.rows(), "LtiSystem: B row count must match A");
    require(C.cols() == A.rows(), "LtiSystem: C column count must match A");
    require(D.rows() == C.rows() && D.cols() == B.cols(),
            "LtiSystem: D must be p x m");
    require(all_finite(A) && all_finite(B) && all_finite(C) && all_finite(D),
            "LtiSystem: matrices must be finite");
}

LtiSystem LtiSystem::from_ab(Matrix A_, Matrix B_) {
    const auto n = A_.rows();
    const auto m = B_.cols();
    return LtiSystem(std::move(A_), std::move(B_),
                     Matrix::Identity(n, n), Matrix::Zero(n, m));
}

void Trajectory::validate() const {
    require(dt > 0.0, "Trajectory: dt must be positive");
    require(Y.cols() == U.cols(), "Trajectory: Y and U must have equal column counts");
    require(Y.cols() >= 1, "Trajectory: at least one sample required");
    require(Y.allFinite() && U.allFinite(), "Trajectory: samples must be finite");
}

double chirp_eval(const ChirpSpec& spec, double t) {
    require(spec.T > 0.0, "chirp_eval: T must be positive");
    require(spec.f0 >= 0.0 && spec.f1 >= 0.0, "chirp_eval: frequencies must be nonnegative");
    if (t < 0.0 || t > spec.T)
        throw InvalidArgument("chirp_eval: t outside [0, T]");
    const double c = spec.rate();
    return spec.psi * std::sin(2.0 * M_PI * (0.5 * c * t * t + spec.f0 * t));
}

InputFn chirp_input(const std::vector<ChirpSpec>& channels) {
    require(!channels.empty(), "chirp_input: at least one channel required");
    return [channels](double t) {
        Vector u(channels.size());
        for (std::size_t i = 0; i < channels.size(); ++i)
            u[static_cast<Eigen::Index>(i)] = chirp_eval(channels[i], t);
        return u;
    };
}

Trajectory simulate(const LtiSystem& sys, const InputFn& input, const Vector& x0,
                    double T, double dt, int substeps) {
    require(dt > 0.0 && T > 0.0, "simulate: T and dt must be positive");
    require(substeps >= 1, "simulate: substeps must be >= 1");
    require(x0.size() == sys.n(), "simulate: x0 dimension mismatch");
    const double steps = T / dt;
    const int N = static_cast<int>(std::lround(steps));
    require(std::abs(steps - N) < 1e-9 * std::max(1.0, steps),
            "simulate: T/dt must be an integer sample count");

    const int n = sys.n();
    const int m = sys.m();
    Trajectory traj;
    traj.dt = dt;
    traj.Y.resize(n, N + 1);
    traj.U.resize(m, N + 1);

    auto deriv = [&](double t, const Vector& x) -> Vector {
        return sys.A * x + sys.B * input(t);
    };

    Vector x = x0;
    traj.Y.col(0) = x;
    traj.U.col(0) = input(0.0);
    const double h = dt / substeps;
    for (int k = 0; k < N; ++k) {
        const double tk = k * dt;
        for (int s = 0; s < substeps; ++s) {
            const double ts = tk + s * h;
            const Vector k1 = deriv(ts, x);
            const Vector k2 = deriv(ts + 0.5 * h, x + (0.5 * h) * k1);
            const Vector k3 = deriv(ts + 0.5 * h, x + (0.5 * h) * k2);
            const Vector k4 = deriv(ts + h, x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) {
                std::ostringstream os;
                os << "simulate: state diverged (non-finite) at t=" << ts + h;
                throw DivergenceError(os.str());
            }
        }
        traj.Y.col(k + 1) = x;
        traj.U.col(k + 1) = input((k + 1) * dt);
    }
    return traj;
}

Trajectory add_noise(const Trajectory& traj, const NoiseSpec& noise) {
    require(noise.sigma >= 0.0, "add_noise: sigma must be nonnegative");
    Trajectory out = traj;
    if (noise.sigma == 0.0) return out;

    // Marsaglia polar method on top of mt19937_64: fully specified by the
    // seed, so outputs are reproducible bit-for-bit.
    std::mt19937_64 gen(noise.seed);
    auto uniform = [&gen]() {
        // in (-1, 1)
        return 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
    };
    bool have_spare = false;
    double spare = 0.0;
    auto gauss = [&]() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u, v, s;
        do {
            u = uniform();
            v = uniform();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare = v * f;
        have_spare = true;
        return u * f;
    };

    for (Eigen::Index k = 0; k < out.Y.cols(); ++k)
        for (Eigen::Index i = 0; i < out.Y.rows(); ++i)
            out.Y(i, k) += noise.sigma * gauss();
    return out;
}

Matrix finite_diff(const Trajectory& traj) {
    const int N = traj.sample_count();
    if (N < 1) throw InvalidArgument("finite_diff: need at least two samples");
    require(traj.dt > 0.0, "finite_diff: dt must be positive");
    return (traj.Y.rightCols(N) - traj.Y.leftCols(N)) / traj.dt;
}

namespace {

void append_number(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

} // namespace

void traj_write(const Trajectory& traj, const std::filesystem::path& path) {
    traj.validate();
    std::ofstream os(path);
    if (!os) throw ParseError("traj_write: cannot open " + path.string());
    const int p = traj.p();
    const int m = traj.m();
    const int N = traj.sample_count();
    std::string line;
    line = "# dt=";
    append_number(line, traj.dt);
    os << line << "\n# n=" << p << "\n# m=" << m << "\n";
    os << "t";
    for (int i = 1; i <= p; ++i) os << ",y" << i;
    for (int i = 1; i <= m; ++i) os << ",u" << i;
    os << "\n";
    for (int k = 0; k <= N; ++k) {
        line.clear();
        append_number(line, traj.t0 + k * traj.dt);
        for (int i = 0; i < p; ++i) {
            line += ',';
            append_number(line, traj.Y(i, k));
        }
        for (int i = 0; i < m; ++i) {
            line += ',';
            append_number(line, traj.U(i, k));
        }
        os << line << "\n";
    }
    if (!os) throw ParseError("traj_write: write failed for " + path.string());
}

namespace {

double parse_cell(const std::string& cell, int lineno) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError("traj_read: non-numeric cell '" + cell + "' at line " +
                         std::to_string(lineno));
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    if (pos != cell.size())
        throw ParseError("traj_read: non-numeric cell '" + cell + "' at line " +
                         std::to_string(lineno));
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

Trajectory traj_read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("traj_read: cannot open " + path.string());

    double dt = 0.0;
    int meta_p = -1, meta_m = -1;
    int p = -1, m = -1;
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eat = [&](const char* key, auto&& store) {
                const std::string k = std::string("# ") + key;
                const std::string k2 = std::string("#") + key;
                std::string rest;
                if (line.rfind(k, 0) == 0) rest = line.substr(k.size());
                else if (line.rfind(k2, 0) == 0) rest = line.substr(k2.size());
                else return;
                store(rest);
            };
            eat("dt=", [&](const std::string& s) { dt = parse_cell(s, lineno); });
            eat("n=", [&](const std::string& s) { meta_p = static_cast<int>(parse_cell(s, lineno)); });
            eat("m=", [&](const std::string& s) { meta_m = static_cast<int>(parse_cell(s, lineno)); });
            continue;
        }
        if (!header_seen) {
            // header: t,y1..yp,u1..um
            const auto cells = split_csv(line);
            if (cells.empty() || cells[0] != "t")
                throw ParseError("traj_read: malformed header at line " + std::to_string(lineno));
            int np = 0, nm = 0;
            for (std::size_t i = 1; i < cells.size(); ++i) {
                if (cells[i].rfind("y", 0) == 0) ++np;
                else if (cells[i].rfind("u", 0) == 0) ++nm;
                else throw ParseError("traj_read: unexpected column '" + cells[i] +
                                      "' at line " + std::to_string(lineno));
            }
            p = np;
            m = nm;
            if (meta_p >= 0 && meta_p != p)
                throw ParseError("traj_read: metadata n= disagrees with header at line " +
                                 std::to_string(lineno));
            if (meta_m >= 0 && meta_m != m)
                throw ParseError("traj_read: metadata m= disagrees with header at line " +
                                 std::to_string(lineno));
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) != 1 + p + m)
            throw ParseError("traj_read: expected " + std::to_string(1 + p + m) +
                             " columns, got " + std::to_string(cells.size()) +
                             " at line " + std::to_string(lineno));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) row.push_back(parse_cell(cell, lineno));
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError("traj_read: missing header in " + path.string());
    if (rows.empty()) throw ParseError("traj_read: no data rows in " + path.string());
    if (dt <= 0.0) {
        if (rows.size() >= 2) dt = rows[1][0] - rows[0][0];
        if (dt <= 0.0) throw ParseError("traj_read: missing or invalid dt metadata");
    }

    Trajectory traj;
    traj.t0 = rows[0][0];
    traj.dt = dt;
    const int N1 = static_cast<int>(rows.size());
    traj.Y.resize(p, N1);
    traj.U.resize(m, N1);
    for (int k = 0; k < N1; ++k) {
        for (int i = 0; i < p; ++i) traj.Y(i, k) = rows[k][1 + i];
        for (int i = 0; i < m; ++i) traj.U(i, k) = rows[k][1 + p + i];
    }
    traj.validate();
    return traj;
}

} // namespace mflqr
