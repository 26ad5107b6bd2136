// SPDX-License-Identifier: Apache-2.0
#include "echorec/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "echorec/common.hpp"
#include "echorec/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian");
static_assert(sizeof(double) == 8, "container format expects binary64");

namespace echorec {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'C', 'H', 'O', 'R', 'E', 'C', '1'};

struct Block {
    std::string name;
    const Eigen::MatrixXd* matrix = nullptr;
    const Eigen::VectorXd* vector = nullptr;

    Eigen::Index rows() const { return matrix ? matrix->rows() : vector->size(); }
    Eigen::Index cols() const { return matrix ? matrix->cols() : 1; }
    const double* data() const { return matrix ? matrix->data() : vector->data(); }
};

json blocks_header(const std::vector<Block>& blocks) {
    json arr = json::array();
    for (const auto& b : blocks)
        arr.push_back({{"name", b.name}, {"rows", b.rows()}, {"cols", b.cols()}});
    return arr;
}

void write_container(const std::string& path, json header,
                     const std::vector<Block>& blocks) {
    header["format_version"] = kFormatVersion;
    header["tool_version"] = kToolVersion;
    header["blocks"] = blocks_header(blocks);
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blocks) {
        const auto bytes = static_cast<std::streamsize>(sizeof(double) * b.rows() * b.cols());
        if (bytes > 0) out.write(reinterpret_cast<const char*>(b.data()), bytes);
    }
    if (!out) throw IoError("write failed: " + path);
}

struct LoadedContainer {
    json header;
    std::vector<Eigen::MatrixXd> blocks;
    std::map<std::string, std::size_t> index;

    const Eigen::MatrixXd& block(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw IoError("container missing block: " + name);
        return blocks[it->second];
    }
};

LoadedContainer read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not an echorec container: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError("truncated header: " + path);

    LoadedContainer c;
    try {
        c.header = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("bad container header in " + path + ": " + e.what());
    }
    if (c.header.value("format_version", -1) != kFormatVersion)
        throw IoError("unsupported format version in " + path);
    for (const auto& b : c.header.at("blocks")) {
        const auto rows = b.at("rows").get<Eigen::Index>();
        const auto cols = b.at("cols").get<Eigen::Index>();
        Eigen::MatrixXd m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * rows * cols));
        if (!in) throw IoError("truncated block '" + b.at("name").get<std::string>() +
                               "' in " + path);
        c.index[b.at("name").get<std::string>()] = c.blocks.size();
        c.blocks.push_back(std::move(m));
    }
    return c;
}

json setup_to_json(const ImagingSetup& s) {
    return {{"num_elements", s.num_elements},
            {"element_pitch", s.element_pitch},
            {"grid_nz", s.grid_nz},
            {"grid_nx", s.grid_nx},
            {"grid_pitch_z", s.grid_pitch_z},
            {"grid_pitch_x", s.grid_pitch_x},
            {"grid_origin", s.grid_origin},
            {"sound_speed", s.sound_speed},
            {"sampling_rate", s.sampling_rate},
            {"pulse_center_freq", s.pulse_center_freq},
            {"pulse_sigma", s.pulse_sigma},
            {"num_samples", s.num_samples}};
}

ImagingSetup setup_from_json(const json& j) {
    ImagingSetup s;
    s.num_elements = j.at("num_elements").get<int>();
    s.element_pitch = j.at("element_pitch").get<double>();
    s.grid_nz = j.at("grid_nz").get<int>();
    s.grid_nx = j.at("grid_nx").get<int>();
    s.grid_pitch_z = j.at("grid_pitch_z").get<double>();
    s.grid_pitch_x = j.at("grid_pitch_x").get<double>();
    s.grid_origin = j.at("grid_origin").get<double>();
    s.sound_speed = j.at("sound_speed").get<double>();
    s.sampling_rate = j.at("sampling_rate").get<double>();
    s.pulse_center_freq = j.at("pulse_center_freq").get<double>();
    s.pulse_sigma = j.at("pulse_sigma").get<double>();
    s.num_samples = j.at("num_samples").get<int>();
    return s;
}

json slice_geometry_json(int offset, int stride, int padding, int input_len,
                         int output_len, int multiplicity) {
    return {{"offset", offset},       {"stride", stride},
            {"padding", padding},     {"input_len", input_len},
            {"output_len", output_len}, {"multiplicity", multiplicity}};
}

} // namespace

void save_model(const std::string& path, const SliceConvModel& model) {
    json header;
    header["kind"] = "model";
    header["setup"] = setup_to_json(model.setup);
    json slices = json::array();
    std::vector<Block> blocks;
    for (const auto& k : model.slices) {
        slices.push_back(slice_geometry_json(k.slice_offset, k.stride, k.padding,
                                             k.input_len, k.output_len, k.multiplicity));
        blocks.push_back({"slice" + std::to_string(k.slice_offset) + ".weights",
                          &k.weights, nullptr});
    }
    header["slices"] = slices;
    write_container(path, std::move(header), blocks);
}

SliceConvModel load_model(const std::string& path) {
    LoadedContainer c = read_container(path);
    if (c.header.value("kind", "") != "model")
        throw IoError(path + " is not a model artifact");
    SliceConvModel model;
    model.setup = setup_from_json(c.header.at("setup"));
    for (const auto& js : c.header.at("slices")) {
        SliceKernel k;
        k.slice_offset = js.at("offset").get<int>();
        k.stride = js.at("stride").get<int>();
        k.padding = js.at("padding").get<int>();
        k.input_len = js.at("input_len").get<int>();
        k.output_len = js.at("output_len").get<int>();
        k.multiplicity = js.at("multiplicity").get<int>();
        k.weights = c.block("slice" + std::to_string(k.slice_offset) + ".weights");
        model.slices.push_back(std::move(k));
    }
    return model;
}

void save_compressed(const std::string& path, const CompressedModel& model) {
    json header;
    header["kind"] = "compressed";
    header["setup"] = setup_to_json(model.setup);
    header["method"] = to_string(model.method);
    header["max_basis"] = model.max_basis;
    header["params_before"] = model.params_before;
    header["params_after"] = model.params_after;
    json slices = json::array();
    json reports = json::array();
    std::vector<Block> blocks;
    for (const auto& fk : model.slices) {
        json js = slice_geometry_json(fk.slice_offset, fk.stride, fk.padding,
                                      fk.input_len, fk.output_len, fk.multiplicity);
        js["method"] = to_string(fk.method);
        js["selected_rows"] = fk.selected_rows;
        js["degenerate"] = fk.degenerate;
        slices.push_back(std::move(js));
        const std::string prefix = "slice" + std::to_string(fk.slice_offset);
        blocks.push_back({prefix + ".basis", &fk.basis, nullptr});
        blocks.push_back({prefix + ".mixing", &fk.mixing, nullptr});
    }
    for (const auto& r : model.reports)
        reports.push_back({{"residual_history", r.residual_history},
                           {"final_error", r.final_error},
                           {"compression_ratio", r.compression_ratio},
                           {"used_pseudo_inverse", r.used_pseudo_inverse},
                           {"note", r.note}});
    header["slices"] = slices;
    header["reports"] = reports;
    write_container(path, std::move(header), blocks);
}

CompressedModel load_compressed(const std::string& path) {
    LoadedContainer c = read_container(path);
    if (c.header.value("kind", "") != "compressed")
        throw IoError(path + " is not a compressed-model artifact");
    CompressedModel model;
    model.setup = setup_from_json(c.header.at("setup"));
    model.method = factor_method_from_string(c.header.at("method").get<std::string>());
    model.max_basis = c.header.at("max_basis").get<int>();
    model.params_before = c.header.at("params_before").get<std::int64_t>();
    model.params_after = c.header.at("params_after").get<std::int64_t>();
    for (const auto& js : c.header.at("slices")) {
        FactorizedKernel fk;
        fk.slice_offset = js.at("offset").get<int>();
        fk.stride = js.at("stride").get<int>();
        fk.padding = js.at("padding").get<int>();
        fk.input_len = js.at("input_len").get<int>();
        fk.output_len = js.at("output_len").get<int>();
        fk.multiplicity = js.at("multiplicity").get<int>();
        fk.method = factor_method_from_string(js.at("method").get<std::string>());
        fk.selected_rows = js.at("selected_rows").get<std::vector<int>>();
        fk.degenerate = js.at("degenerate").get<bool>();
        const std::string prefix = "slice" + std::to_string(fk.slice_offset);
        fk.basis = c.block(prefix + ".basis");
        fk.mixing = c.block(prefix + ".mixing");
        model.slices.push_back(std::move(fk));
    }
    for (const auto& jr : c.header.at("reports")) {
        FactorizationReport r;
        r.residual_history = jr.at("residual_history").get<std::vector<double>>();
        r.final_error = jr.at("final_error").get<double>();
        r.compression_ratio = jr.at("compression_ratio").get<double>();
        r.used_pseudo_inverse = jr.at("used_pseudo_inverse").get<bool>();
        r.note = jr.at("note").get<std::string>();
        model.reports.push_back(std::move(r));
    }
    return model;
}

namespace {

json network_header(const UnrolledNet& net, std::vector<Block>* blocks) {
    json header;
    header["kind"] = "network";
    header["arch"] = to_string(net.arch);
    header["num_blocks"] = net.num_blocks;
    header["share_kernels"] = net.share_kernels;
    header["trainable"] = {{"forward_kernels", net.trainable.forward_kernels},
                           {"transposed_kernels", net.trainable.transposed_kernels},
                           {"thresholds", net.trainable.thresholds}};
    header["step_scale"] = net.step_scale;
    header["init"] = {{"kind", to_string(net.init)},
                      {"seed", net.init_seed},
                      {"lambda", net.init_lambda},
                      {"lipschitz", net.init_lipschitz}};
    header["dims"] = {{"ns", net.ns}, {"nd", net.nd}, {"nz", net.nz},
                      {"nx", net.nx}, {"nt", net.nt}, {"nc", net.nc}};
    json meta = json::array();
    for (const auto& m : net.meta) {
        json jm = slice_geometry_json(m.slice_offset, m.stride, m.padding, m.input_len,
                                      m.output_len, m.multiplicity);
        jm["c_out"] = m.c_out;
        jm["kernel_len"] = m.kernel_len;
        jm["num_basis"] = m.num_basis;
        meta.push_back(std::move(jm));
    }
    header["meta"] = meta;

    if (blocks) {
        blocks->push_back({"thresholds", nullptr, &net.thresholds});
        for (int s = 0; s < net.num_sets(); ++s) {
            const std::string p = "set" + std::to_string(s) + ".";
            if (net.arch == Arch::mlp) {
                blocks->push_back({p + "w1", &net.w1[s], nullptr});
                blocks->push_back({p + "w2", &net.w2[s], nullptr});
            } else if (net.arch == Arch::cbc) {
                for (std::size_t i = 0; i < net.fwd_factors[s].size(); ++i) {
                    const std::string q = p + "slice" + std::to_string(i) + ".";
                    blocks->push_back({q + "fwd.basis", &net.fwd_factors[s][i].basis, nullptr});
                    blocks->push_back({q + "fwd.mixing", &net.fwd_factors[s][i].mixing, nullptr});
                    blocks->push_back({q + "bwd.basis", &net.bwd_factors[s][i].basis, nullptr});
                    blocks->push_back({q + "bwd.mixing", &net.bwd_factors[s][i].mixing, nullptr});
                }
            } else {
                for (std::size_t i = 0; i < net.fwd_banks[s].size(); ++i) {
                    const std::string q = p + "slice" + std::to_string(i) + ".";
                    blocks->push_back({q + "fwd", &net.fwd_banks[s][i], nullptr});
                    blocks->push_back({q + "bwd", &net.bwd_banks[s][i], nullptr});
                }
            }
        }
    }
    return header;
}

} // namespace

std::string network_header_json(const UnrolledNet& net) {
    std::vector<Block> blocks;
    json header = network_header(net, &blocks);
    header["format_version"] = kFormatVersion;
    header["tool_version"] = kToolVersion;
    header["blocks"] = blocks_header(blocks);
    return header.dump();
}

void save_network(const std::string& path, const UnrolledNet& net) {
    std::vector<Block> blocks;
    json header = network_header(net, &blocks);
    write_container(path, std::move(header), blocks);
}

UnrolledNet load_network(const std::string& path) {
    LoadedContainer c = read_container(path);
    if (c.header.value("kind", "") != "network")
        throw IoError(path + " is not a network artifact");
    UnrolledNet net;
    net.arch = arch_from_string(c.header.at("arch").get<std::string>());
    net.num_blocks = c.header.at("num_blocks").get<int>();
    net.share_kernels = c.header.at("share_kernels").get<bool>();
    const auto& jt = c.header.at("trainable");
    net.trainable.forward_kernels = jt.at("forward_kernels").get<bool>();
    net.trainable.transposed_kernels = jt.at("transposed_kernels").get<bool>();
    net.trainable.thresholds = jt.at("thresholds").get<bool>();
    net.step_scale = c.header.at("step_scale").get<double>();
    const auto& ji = c.header.at("init");
    net.init = init_kind_from_string(ji.at("kind").get<std::string>());
    net.init_seed = ji.at("seed").get<std::uint64_t>();
    net.init_lambda = ji.at("lambda").get<double>();
    net.init_lipschitz = ji.at("lipschitz").get<double>();
    const auto& jd = c.header.at("dims");
    net.ns = jd.at("ns").get<int>();
    net.nd = jd.at("nd").get<int>();
    net.nz = jd.at("nz").get<int>();
    net.nx = jd.at("nx").get<int>();
    net.nt = jd.at("nt").get<int>();
    net.nc = jd.at("nc").get<int>();
    for (const auto& jm : c.header.at("meta")) {
        SliceMeta m;
        m.slice_offset = jm.at("offset").get<int>();
        m.stride = jm.at("stride").get<int>();
        m.padding = jm.at("padding").get<int>();
        m.input_len = jm.at("input_len").get<int>();
        m.output_len = jm.at("output_len").get<int>();
        m.multiplicity = jm.at("multiplicity").get<int>();
        m.c_out = jm.at("c_out").get<int>();
        m.kernel_len = jm.at("kernel_len").get<int>();
        m.num_basis = jm.at("num_basis").get<int>();
        net.meta.push_back(m);
    }
    net.thresholds = c.block("thresholds").col(0);
    for (int s = 0; s < net.num_sets(); ++s) {
        const std::string p = "set" + std::to_string(s) + ".";
        if (net.arch == Arch::mlp) {
            net.w1.push_back(c.block(p + "w1"));
            net.w2.push_back(c.block(p + "w2"));
        } else if (net.arch == Arch::cbc) {
            std::vector<CbcSlice> fwd, bwd;
            for (std::size_t i = 0; i < net.meta.size(); ++i) {
                const std::string q = p + "slice" + std::to_string(i) + ".";
                fwd.push_back({c.block(q + "fwd.basis"), c.block(q + "fwd.mixing")});
                bwd.push_back({c.block(q + "bwd.basis"), c.block(q + "bwd.mixing")});
            }
            net.fwd_factors.push_back(std::move(fwd));
            net.bwd_factors.push_back(std::move(bwd));
        } else {
            std::vector<Eigen::MatrixXd> fwd, bwd;
            for (std::size_t i = 0; i < net.meta.size(); ++i) {
                const std::string q = p + "slice" + std::to_string(i) + ".";
                fwd.push_back(c.block(q + "fwd"));
                bwd.push_back(c.block(q + "bwd"));
            }
            net.fwd_banks.push_back(std::move(fwd));
            net.bwd_banks.push_back(std::move(bwd));
        }
    }
    return net;
}

void save_cube(const std::string& path, const DataCube& cube) {
    json header;
    header["kind"] = "cube";
    header["nt"] = cube.nt;
    header["nc"] = cube.nc;
    write_container(path, std::move(header), {{"values", nullptr, &cube.values}});
}

DataCube load_cube(const std::string& path) {
    LoadedContainer c = read_container(path);
    if (c.header.value("kind", "") != "cube")
        throw IoError(path + " is not a data-cube artifact");
    DataCube cube(c.header.at("nt").get<int>(), c.header.at("nc").get<int>());
    cube.values = c.block("values").col(0);
    return cube;
}

void save_map(const std::string& path, const ReflectivityMap& map) {
    json header;
    header["kind"] = "map";
    header["nz"] = map.nz;
    header["nx"] = map.nx;
    write_container(path, std::move(header), {{"values", nullptr, &map.values}});
}

ReflectivityMap load_map(const std::string& path) {
    LoadedContainer c = read_container(path);
    if (c.header.value("kind", "") != "map")
        throw IoError(path + " is not a reflectivity-map artifact");
    ReflectivityMap map(c.header.at("nz").get<int>(), c.header.at("nx").get<int>());
    map.values = c.block("values").col(0);
    return map;
}

std::string artifact_kind(const std::string& path) {
    return read_container(path).header.value("kind", "");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    json j;
    j["command"] = manifest.command;
    j["tool_version"] = manifest.tool_version.empty() ? kToolVersion : manifest.tool_version;
    j["config"] = manifest.config_snapshot;
    j["seed"] = manifest.seed;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["output_hashes"] = manifest.output_hashes;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.command = j.value("command", "");
    m.tool_version = j.value("tool_version", "");
    m.config_snapshot = j.value("config", std::map<std::string, std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.output_hashes = j.value("output_hashes", std::map<std::string, std::string>{});
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    return m;
}

} // namespace echorec
