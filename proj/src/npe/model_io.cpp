#include "hemo/npe/model_io.hpp"

#include <cstring>
#include <fstream>

#include "hemo/common/binary_io.hpp"
#include "hemo/common/error.hpp"

namespace hemo::npe {

namespace {
const char kMagic[4] = {'H', 'N', 'P', 'E'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_model(const std::string& path, const Npe<float>& model, const TrainConfig& tc,
                const SplitIndices& split, const LossCurve& curve) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("io", "open_failed", "cannot write " + path);
    os.write(kMagic, 4);
    io::write_pod(os, kVersion);
    io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(model.modality));

    for (const auto& p : model.flow.perms)
        for (int v : p) io::write_pod<std::int32_t>(os, v);

    for (double v : model.norm.phi_mean) io::write_pod(os, v);
    for (double v : model.norm.phi_std) io::write_pod(os, v);
    io::write_pod(os, model.norm.x_mean);
    io::write_pod(os, model.norm.x_std);
    io::write_pod(os, model.norm.age_center);
    io::write_pod(os, model.norm.age_scale);

    io::write_string(os, tc.to_json().dump());
    io::write_string(os, split.to_json().dump());
    nlohmann::json curve_json = {{"train_nll", curve.train_nll},
                                 {"val_nll", curve.val_nll},
                                 {"best_epoch", curve.best_epoch}};
    io::write_string(os, curve_json.dump());

    auto& mut = const_cast<Npe<float>&>(model);
    io::write_pod<std::uint64_t>(os, mut.param_count());
    mut.visit_params([&](float* p, std::size_t n) {
        io::write_pod<std::uint64_t>(os, n);
        os.write(reinterpret_cast<const char*>(p),
                 static_cast<std::streamsize>(n * sizeof(float)));
    });
}

LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("io", "open_failed", "cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("io", "bad_magic", path + " is not a model container");
    if (io::read_pod<std::uint32_t>(is) != kVersion)
        throw Error("io", "bad_version", "unsupported model version in " + path);

    LoadedModel out;
    out.model.modality = static_cast<signal::Modality>(io::read_pod<std::uint8_t>(is));
    out.model.init(0);  // allocate shapes and masks, weights overwritten below

    for (auto& p : out.model.flow.perms)
        for (int& v : p) v = io::read_pod<std::int32_t>(is);

    for (double& v : out.model.norm.phi_mean) v = io::read_pod<double>(is);
    for (double& v : out.model.norm.phi_std) v = io::read_pod<double>(is);
    out.model.norm.x_mean = io::read_pod<double>(is);
    out.model.norm.x_std = io::read_pod<double>(is);
    out.model.norm.age_center = io::read_pod<double>(is);
    out.model.norm.age_scale = io::read_pod<double>(is);

    out.config = TrainConfig::from_json(nlohmann::json::parse(io::read_string(is)));
    const auto split_json = nlohmann::json::parse(io::read_string(is));
    out.split.train = split_json.at("train").get<std::vector<std::uint32_t>>();
    out.split.val = split_json.at("val").get<std::vector<std::uint32_t>>();
    out.split.test = split_json.at("test").get<std::vector<std::uint32_t>>();
    const auto curve_json = nlohmann::json::parse(io::read_string(is));
    out.curve.train_nll = curve_json.at("train_nll").get<std::vector<double>>();
    out.curve.val_nll = curve_json.at("val_nll").get<std::vector<double>>();
    out.curve.best_epoch = curve_json.at("best_epoch").get<int>();

    const auto total = io::read_pod<std::uint64_t>(is);
    if (total != out.model.param_count())
        throw Error("io", "shape_mismatch", "parameter count does not match this build");
    out.model.visit_params([&](float* p, std::size_t n) {
        const auto stored = io::read_pod<std::uint64_t>(is);
        if (stored != n)
            throw Error("io", "shape_mismatch", "parameter block size mismatch in " + path);
        is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
        if (!is) throw Error("io", "truncated", "model file ends early: " + path);
    });
    return out;
}

} // namespace hemo::npe
