#include "lwsw/field_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lwsw {

static_assert(std::endian::native == std::endian::little,
              "field dumps are little-endian; big-endian hosts need a swap pass");

namespace {

using nlohmann::json;

void write_header(std::ofstream& out, int M, double L, const char* kind) {
    json h;
    h["M"] = M;
    h["L"] = L;
    h["kind"] = kind;
    out << h.dump() << '\n';
}

struct Header {
    int M;
    double L;
    FieldKind kind;
};

Header read_header(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("field dump " + path + ": missing header line");
    json h = json::parse(line, nullptr, true);
    Header out{};
    out.M = h.at("M").get<int>();
    out.L = h.at("L").get<double>();
    const std::string kind = h.at("kind").get<std::string>();
    if (kind == "real") out.kind = FieldKind::real;
    else if (kind == "complex") out.kind = FieldKind::complex;
    else throw std::runtime_error("field dump " + path + ": bad kind '" + kind + "'");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open field dump " + path);
    return in;
}

} // namespace

void dump_field(const std::string& path, const RealField& f) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write field dump " + path);
    write_header(out, f.grid->M, f.grid->L, "real");
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write on field dump " + path);
}

void dump_field(const std::string& path, const ComplexField& f) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write field dump " + path);
    write_header(out, f.grid->M, f.grid->L, "complex");
    // std::complex<double> is layout-compatible with double[2] (re, im)
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(cplx)));
    if (!out) throw std::runtime_error("short write on field dump " + path);
}

FieldKind probe_field(const std::string& path) {
    auto in = open_in(path);
    return read_header(in, path).kind;
}

RealField load_real_field(const std::string& path) {
    auto in = open_in(path);
    Header h = read_header(in, path);
    if (h.kind != FieldKind::real)
        throw std::runtime_error("field dump " + path + " is not real");
    RealField f = real_field(make_grid(h.L, h.M));
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(f.v.size() * sizeof(double)))
        throw std::runtime_error("field dump " + path + ": truncated payload");
    return f;
}

ComplexField load_complex_field(const std::string& path) {
    auto in = open_in(path);
    Header h = read_header(in, path);
    if (h.kind != FieldKind::complex)
        throw std::runtime_error("field dump " + path + " is not complex");
    ComplexField f = complex_field(make_grid(h.L, h.M));
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(cplx)));
    if (in.gcount() != static_cast<std::streamsize>(f.v.size() * sizeof(cplx)))
        throw std::runtime_error("field dump " + path + ": truncated payload");
    return f;
}

} // namespace lwsw
