#include "vortopo/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace vortopo {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
    return j;
}

void dump_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

std::vector<Filament> read_filaments(const std::filesystem::path& path) {
    const ordered_json j = load_json(path);
    if (!j.contains("filaments") || !j["filaments"].is_array())
        throw IoError(path.string() + ": missing top-level \"filaments\" array");
    std::vector<Filament> out;
    for (const auto& e : j["filaments"]) {
        Filament f;
        f.id = e.value("id", static_cast<int>(out.size()));
        f.gamma = e.value("gamma", 1.0);
        if (!e.contains("points") || !e["points"].is_array())
            throw IoError(path.string() + ": filament entry without points");
        for (const auto& p : e["points"]) {
            if (!p.is_array() || p.size() != 3)
                throw IoError(path.string() + ": point is not an [x,y,z] triple");
            f.points.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                  p[2].get<double>());
        }
        validate_filament(f);
        out.push_back(std::move(f));
    }
    return out;
}

void write_filaments(const std::filesystem::path& path,
                     const std::vector<Filament>& filaments) {
    ordered_json j;
    j["filaments"] = ordered_json::array();
    for (const auto& f : filaments) {
        ordered_json e;
        e["id"] = f.id;
        e["gamma"] = f.gamma;
        ordered_json pts = ordered_json::array();
        for (const auto& p : f.points)
            pts.push_back(ordered_json::array({p.x(), p.y(), p.z()}));
        e["points"] = std::move(pts);
        j["filaments"].push_back(std::move(e));
    }
    dump_json(path, j);
}

void write_report(const std::filesystem::path& path, const HelicityReport& rep) {
    ordered_json j;
    const auto n = static_cast<std::size_t>(rep.lk.rows());
    ordered_json lk = ordered_json::array(), lk_raw = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
        ordered_json row = ordered_json::array(), row_raw = ordered_json::array();
        for (std::size_t k = 0; k < n; ++k) {
            row.push_back(rep.lk(i, k));
            row_raw.push_back(rep.lk_raw(i, k));
        }
        lk.push_back(std::move(row));
        lk_raw.push_back(std::move(row_raw));
    }
    j["lk"] = std::move(lk);
    j["wr"] = rep.wr;
    j["tw"] = rep.tw;
    j["sl"] = rep.sl;
    j["total"] = rep.total;
    j["tolerances"] = {{"round", rep.round_tol}};
    j["gammas"] = rep.gammas;
    j["lk_raw"] = std::move(lk_raw);
    dump_json(path, j);
}

namespace {

void write_grid_blob(const std::filesystem::path& path, const ordered_json& header,
                     const char* bytes, std::size_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << header.dump() << "\n";
    out.write(bytes, static_cast<std::streamsize>(count));
    if (!out) throw IoError("short write to " + path.string());
}

ordered_json read_grid_header(std::ifstream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing header in " + path.string());
    try {
        return ordered_json::parse(line);
    } catch (const std::exception& e) {
        throw IoError("bad grid header in " + path.string() + ": " + e.what());
    }
}

}  // namespace

void write_vector_grid(const std::filesystem::path& path, const VectorGrid& grid) {
    ordered_json h;
    h["shape"] = grid.spec.shape;
    h["origin"] = {grid.spec.origin.x(), grid.spec.origin.y(), grid.spec.origin.z()};
    h["spacing"] = grid.spec.spacing;
    h["components"] = 3;
    h["dtype"] = "f64-le";
    write_grid_blob(path, h, reinterpret_cast<const char*>(grid.data.data()),
                    grid.data.size() * sizeof(double));
}

VectorGrid read_vector_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const ordered_json h = read_grid_header(in, path);
    VectorGrid g;
    const auto shape = h.at("shape");
    g.spec.shape = {shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>()};
    const auto origin = h.at("origin");
    g.spec.origin = Vec3(origin[0].get<double>(), origin[1].get<double>(),
                         origin[2].get<double>());
    g.spec.spacing = h.at("spacing").get<double>();
    if (h.at("dtype").get<std::string>() != "f64-le" ||
        h.at("components").get<int>() != 3)
        throw IoError("unexpected grid dtype in " + path.string());
    g.data.resize(3 * g.spec.cell_count());
    in.read(reinterpret_cast<char*>(g.data.data()),
            static_cast<std::streamsize>(g.data.size() * sizeof(double)));
    if (!in) throw IoError("short read from " + path.string());
    return g;
}

void write_complex_field(const std::filesystem::path& path,
                         const ComplexField3D& field) {
    ordered_json h;
    h["shape"] = field.shape;
    h["origin"] = {-field.shape[0] / 2 * field.spacing,
                   -field.shape[1] / 2 * field.spacing,
                   -field.shape[2] / 2 * field.spacing};
    h["spacing"] = field.spacing;
    h["components"] = 1;
    h["dtype"] = "c128-le";
    h["time"] = field.time;
    write_grid_blob(path, h, reinterpret_cast<const char*>(field.data.data()),
                    field.data.size() * sizeof(std::complex<double>));
}

ComplexField3D read_complex_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const ordered_json h = read_grid_header(in, path);
    ComplexField3D f;
    const auto shape = h.at("shape");
    f.shape = {shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>()};
    f.spacing = h.at("spacing").get<double>();
    f.time = h.value("time", 0.0);
    if (h.at("dtype").get<std::string>() != "c128-le")
        throw IoError("unexpected field dtype in " + path.string());
    f.data.resize(f.cell_count());
    in.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(std::complex<double>)));
    if (!in) throw IoError("short read from " + path.string());
    return f;
}

void write_series_csv(const std::filesystem::path& path, const GpeSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t,norm,energy,total_length,lk_sum\n";
    char buf[256];
    for (const auto& s : series.snapshots) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                      s.norm, s.energy, s.total_length, s.lk_sum);
        out << buf;
    }
}

std::uint64_t fnv1a64(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& names) {
    ordered_json j;
    j["files"] = ordered_json::object();
    for (const auto& name : names) {
        const auto p = dir / name;
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(p)));
        j["files"][name] = {{"bytes", std::filesystem::file_size(p)},
                            {"fnv1a64", std::string(hex)}};
    }
    dump_json(dir / "manifest.json", j);
}

}  // namespace vortopo
