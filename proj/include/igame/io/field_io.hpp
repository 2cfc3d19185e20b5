#pragma once

/**
 * @file field_io.hpp
 * @brief CSV persistence of value fields, residuals and path ensembles, and
 *        comparison of two stored fields.
 *
 * Field files have the header `t,x0[,x1],value,region,action`, rows in
 * time-major then node order. The action column holds the impulse shift
 * itself (components joined by ';' in two dimensions) and is empty for CONT.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "igame/errors.hpp"
#include "igame/grid.hpp"
#include "igame/hjbi_fd.hpp"
#include "igame/io/format.hpp"
#include "igame/problem_model.hpp"
#include "igame/simulate.hpp"

namespace igame::io {

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string action_text(const std::vector<double>& a) {
    std::string s;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (k) s += ';';
        s += format_double(a[k]);
    }
    return s;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    return out;
}

/// Sorted distinct values.
inline std::vector<double> distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

inline std::string field_header(std::size_t dim) {
    return dim == 1 ? "t,x0,value,region,action" : "t,x0,x1,value,region,action";
}

inline void write_field(const ValueField& f, const ProblemSpec& spec, std::ostream& out) {
    const Grid& g = f.grid.space;
    out << field_header(g.dim()) << '\n';
    for (std::size_t k = 0; k < f.levels(); ++k) {
        const std::string t = format_double(f.grid.time(k));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto x = g.coords(i);
            const std::size_t idx = k * f.nodes() + i;
            out << t;
            for (std::size_t a = 0; a < g.dim(); ++a) out << ',' << format_double(x[a]);
            out << ',' << format_double(f.values[idx]) << ',' << to_string(f.region[idx]) << ',';
            if (f.region[idx] == Region::I_INT)
                out << detail::action_text(spec.impulse_U.actions.at(static_cast<std::size_t>(f.action[idx])));
            else if (f.region[idx] == Region::II_INT)
                out << detail::action_text(spec.impulse_V.actions.at(static_cast<std::size_t>(f.action[idx])));
            out << '\n';
        }
    }
}

inline void write_field(const ValueField& f, const ProblemSpec& spec, const std::string& path) {
    auto out = detail::open_out(path);
    write_field(f, spec, out);
    if (!out) throw Error("write failed: " + path);
}

/// Reads a field file. With a problem, action shifts are mapped back to
/// action indices; without one, every action index is -1.
inline ValueField read_field(std::istream& in, const ProblemSpec* spec = nullptr, const std::string& origin = "<field>") {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(origin + ": empty field file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t dim = 0;
    if (line == field_header(1))
        dim = 1;
    else if (line == field_header(2))
        dim = 2;
    else
        throw ValidationError(origin + ": unexpected header '" + line + "'");

    struct Row {
        double t;
        Point x;
        double v;
        Region r;
        std::string action;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != dim + 4) throw ValidationError(origin + ":" + std::to_string(lineno) + ": wrong column count");
        Row r{};
        try {
            r.t = parse_double(cells[0]);
            for (std::size_t a = 0; a < dim; ++a) r.x[a] = parse_double(cells[1 + a]);
            r.v = parse_double(cells[dim + 1]);
            r.r = region_from_string(cells[dim + 2]);
        } catch (const Error& e) {
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
        r.action = cells[dim + 3];
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ValidationError(origin + ": no data rows");

    std::vector<double> ts;
    std::array<std::vector<double>, kMaxDim> xs;
    for (const auto& r : rows) {
        ts.push_back(r.t);
        for (std::size_t a = 0; a < dim; ++a) xs[a].push_back(r.x[a]);
    }
    ts = detail::distinct(ts);
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < dim; ++a) {
        xs[a] = detail::distinct(xs[a]);
        if (xs[a].size() < 2) throw ValidationError(origin + ": axis with fewer than two nodes");
        const double step = (xs[a].back() - xs[a].front()) / static_cast<double>(xs[a].size() - 1);
        axes.push_back(Axis::aligned(xs[a].front(), xs[a].back(), step));
        if (axes.back().size() != xs[a].size()) throw ValidationError(origin + ": non-uniform axis");
    }
    if (ts.size() < 2) throw ValidationError(origin + ": field needs at least two time levels");
    ValueField f;
    f.allocate(SpaceTimeGrid{Grid(axes), ts.size() - 1, ts.back()}, false);
    if (rows.size() != f.values.size()) throw ValidationError(origin + ": row count does not match the grid");

    std::map<std::string, int> u_index, v_index;
    if (spec) {
        for (std::size_t k = 0; k < spec->impulse_U.size(); ++k)
            u_index[detail::action_text(spec->impulse_U.actions[k])] = static_cast<int>(k);
        for (std::size_t k = 0; k < spec->impulse_V.size(); ++k)
            v_index[detail::action_text(spec->impulse_V.actions[k])] = static_cast<int>(k);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        f.values[i] = r.v;
        f.region[i] = r.r;
        if (spec && r.r != Region::CONT) {
            const auto& table = r.r == Region::I_INT ? u_index : v_index;
            const auto it = table.find(r.action);
            if (it == table.end()) throw ValidationError(origin + ": unknown action '" + r.action + "'");
            f.action[i] = it->second;
        }
    }
    return f;
}

inline ValueField read_field(const std::string& path, const ProblemSpec* spec = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return read_field(in, spec, path);
}

/// Per-(level, node) residual as CSV `t,x0[,x1],residual`.
inline void write_residual(const ValueField& f, const ResidualField& r, const std::string& path) {
    auto out = detail::open_out(path);
    const Grid& g = f.grid.space;
    out << (g.dim() == 1 ? "t,x0,residual" : "t,x0,x1,residual") << '\n';
    for (std::size_t k = 0; k < f.levels(); ++k) {
        const std::string t = format_double(f.grid.time(k));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto x = g.coords(i);
            out << t;
            for (std::size_t a = 0; a < g.dim(); ++a) out << ',' << format_double(x[a]);
            out << ',' << format_double(r.residual[k * f.nodes() + i]) << '\n';
        }
    }
}

/// Debug export of an ensemble: one `state` row per recorded level and one
/// row per impulse, `path,t,kind,x0[,x1]` where kind is state, I or II and the
/// coordinates are the state (state rows) or the shift (impulse rows).
inline void write_paths(const PathEnsemble& ens, const std::string& path) {
    auto out = detail::open_out(path);
    out << (ens.dim == 1 ? "path,t,kind,x0" : "path,t,kind,x0,x1") << '\n';
    for (std::size_t p = 0; p < ens.paths.size(); ++p) {
        const auto& rec = ens.paths[p];
        struct Row {
            double t;
            int order;
            std::string kind;
            std::vector<double> x;
        };
        std::vector<Row> rows;
        for (std::size_t k = 0; k * ens.dim < rec.states.size(); ++k) {
            const double t = static_cast<double>(ens.start_level + k) * ens.dt;
            rows.push_back({t, 2, "state",
                            std::vector<double>(rec.states.begin() + static_cast<long>(k * ens.dim),
                                                rec.states.begin() + static_cast<long>((k + 1) * ens.dim))});
        }
        for (const auto& e : rec.v.events()) rows.push_back({e.time, 0, "II", e.action});
        for (const auto& e : rec.u.events()) rows.push_back({e.time, 1, "I", e.action});
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.t < b.t || (a.t == b.t && a.order < b.order); });
        for (const auto& r : rows) {
            out << p << ',' << format_double(r.t) << ',' << r.kind;
            for (double v : r.x) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

struct GapReport {
    double sup = 0.0;
    double mean = 0.0;
    std::size_t levels = 0;  ///< time levels present in both fields
    std::size_t nodes = 0;   ///< interior nodes compared per level
};

/// Resamples the field with fewer nodes onto the other one's interior nodes
/// (multilinear) at every common time level and reports sup and mean |a - b|.
inline GapReport compare_fields(const ValueField& a, const ValueField& b, double interior_fraction = 0.8) {
    if (a.grid.space.dim() != b.grid.space.dim()) throw DomainError("fields have different dimensions");
    const bool a_fine = a.nodes() >= b.nodes();
    const ValueField& fine = a_fine ? a : b;
    const ValueField& coarse = a_fine ? b : a;
    const Grid& g = fine.grid.space;
    const Grid& c = coarse.grid.space;

    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_interior(i, interior_fraction)) continue;
        const auto x = g.coords(i);
        if (!grid_contains(c, std::span<const double>(x.data(), g.dim())))
            throw DomainError("interior box of the finer field is not covered by the coarser field");
        nodes.push_back(i);
    }
    if (nodes.empty()) throw DomainError("no interior nodes to compare");

    GapReport r;
    double total = 0.0;
    std::size_t count = 0;
    const double tol = 1e-9 * std::max(fine.grid.horizon, 1.0);
    for (std::size_t kf = 0; kf < fine.levels(); ++kf) {
        const double t = fine.grid.time(kf);
        std::size_t kc = coarse.levels();
        for (std::size_t j = 0; j < coarse.levels(); ++j)
            if (std::abs(coarse.grid.time(j) - t) <= tol) kc = j;
        if (kc == coarse.levels()) continue;
        ++r.levels;
        const auto fv = fine.level(kf);
        const auto cv = coarse.level(kc);
        for (const std::size_t i : nodes) {
            const auto x = g.coords(i);
            const double other = interpolate(c, cv, std::span<const double>(x.data(), g.dim()));
            const double d = std::abs(fv[i] - other);
            r.sup = std::max(r.sup, d);
            total += d;
            ++count;
        }
    }
    if (r.levels == 0) throw DomainError("fields share no time level");
    r.nodes = nodes.size();
    r.mean = total / static_cast<double>(count);
    return r;
}

inline GapReport compare_fields(const std::string& a, const std::string& b, double interior_fraction = 0.8) {
    return compare_fields(read_field(a), read_field(b), interior_fraction);
}

}  // namespace igame::io
