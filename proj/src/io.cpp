#include "retarda/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "retarda/errors.hpp"

namespace retarda {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

Json pieces_to_json(const PiecewisePoly& fn) {
    Json pieces = Json::array();
    for (const auto& p : fn.pieces()) {
        Json coeffs = Json::array();
        int deg = 0;
        for (const auto& c : p.comp) deg = std::max(deg, c.degree());
        for (int k = 0; k <= std::max(0, deg); ++k) {
            Json row = Json::array();
            for (const auto& c : p.comp) {
                double v = (k < static_cast<int>(c.coeffs().size())) ? c.coeffs()[k] : 0.0;
                row.push_back(v);
            }
            coeffs.push_back(std::move(row));
        }
        pieces.push_back({{"from", p.from}, {"to", p.to}, {"poly_coeffs", std::move(coeffs)}});
    }
    return pieces;
}

PiecewisePoly pieces_from_json(const Json& pieces, std::size_t dim) {
    if (!pieces.is_array() || pieces.empty()) throw ParseError("pieces must be a nonempty array");
    std::vector<PiecePoly> out;
    out.reserve(pieces.size());
    for (const auto& pj : pieces) {
        PiecePoly p;
        p.from = pj.at("from").get<double>();
        p.to = pj.at("to").get<double>();
        const auto& coeffs = pj.at("poly_coeffs");
        if (!coeffs.is_array() || coeffs.empty()) throw ParseError("poly_coeffs must be nonempty");
        std::vector<std::vector<double>> per_comp(dim);
        for (const auto& row : coeffs) {
            if (row.size() != dim) throw ParseError("poly_coeffs row dimension mismatch");
            for (std::size_t d = 0; d < dim; ++d) per_comp[d].push_back(row[d].get<double>());
        }
        p.comp.reserve(dim);
        for (auto& c : per_comp) p.comp.emplace_back(std::move(c));
        out.push_back(std::move(p));
    }
    return PiecewisePoly(dim, std::move(out));
}

} // namespace

Json history_to_json(const PiecewiseHistory& h) {
    return Json{{"dim", h.dim()},
                {"point_value", h.point_value()},
                {"pieces", pieces_to_json(h.fn())}};
}

PiecewiseHistory history_from_json(const Json& j) {
    std::size_t dim = j.at("dim").get<std::size_t>();
    if (dim == 0) throw ParseError("history dim must be positive");
    auto pv = j.at("point_value").get<std::vector<double>>();
    if (pv.size() != dim) throw ParseError("point_value dimension mismatch");
    return PiecewiseHistory(pieces_from_json(j.at("pieces"), dim), std::move(pv));
}

Json signal_to_json(const InputSignal& u) {
    Json j{{"dim", u.dim()}};
    if (u.dim() > 0) j["pieces"] = pieces_to_json(u.fn());
    return j;
}

InputSignal signal_from_json(const Json& j) {
    std::size_t dim = j.at("dim").get<std::size_t>();
    if (dim == 0) return empty_signal();
    return InputSignal(pieces_from_json(j.at("pieces"), dim));
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw NumericError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace retarda
