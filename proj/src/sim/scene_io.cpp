#include "dvx/sim/scene_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dvx/core/error.hpp"
#include "dvx/core/parallel.hpp"
#include "dvx/core/rng.hpp"

namespace dvx::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 4> kPointMagic = {'D', 'V', 'P', 'C'};
constexpr std::uint32_t kPointVersion = 1;

template <typename U>
void put_le(std::ostream& os, U v) {
    static_assert(std::is_unsigned_v<U>);
    unsigned char b[sizeof(U)];
    for (std::size_t k = 0; k < sizeof(U); ++k) {
        b[k] = static_cast<unsigned char>(v >> (8 * k));
    }
    os.write(reinterpret_cast<const char*>(b), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
    unsigned char b[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(U))) {
        fail(ErrorKind::Data, "unexpected end of file");
    }
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) {
        v |= static_cast<U>(static_cast<U>(b[k]) << (8 * k));
    }
    return v;
}

json pose_json(const geom::PoseSE3& p) {
    const Eigen::Matrix4d m = p.matrix();
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
        rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    }
    return rows;
}

geom::PoseSE3 pose_from_json(const json& j) {
    Eigen::Matrix4d m;
    if (!j.is_array() || j.size() != 4) {
        fail(ErrorKind::Data, "pose must be a 4x4 array");
    }
    for (int r = 0; r < 4; ++r) {
        if (!j[r].is_array() || j[r].size() != 4) {
            fail(ErrorKind::Data, "pose must be a 4x4 array");
        }
        for (int c = 0; c < 4; ++c) {
            m(r, c) = j[r][c].get<double>();
        }
    }
    return geom::PoseSE3::from_matrix(m);
}

}  // namespace

void write_points(const fs::path& path, const PointCloud& cloud) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        fail(ErrorKind::Data, "cannot open for writing: " + path.string());
    }
    os.write(kPointMagic.data(), kPointMagic.size());
    put_le<std::uint32_t>(os, kPointVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.size()));
    for (const Point& p : cloud) {
        for (const double v : {p.x, p.y, p.z, p.intensity}) {
            put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    if (!os) {
        fail(ErrorKind::Data, "write failed: " + path.string());
    }
}

PointCloud read_points(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(ErrorKind::Data, "cannot open point file: " + path.string());
    }
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kPointMagic) {
        fail(ErrorKind::Data, "bad point file magic: " + path.string());
    }
    const auto version = get_le<std::uint32_t>(is);
    if (version != kPointVersion) {
        fail(ErrorKind::Data, "unsupported point file version " + std::to_string(version));
    }
    const auto count = get_le<std::uint32_t>(is);
    PointCloud cloud(count);
    for (Point& p : cloud) {
        double* fields[4] = {&p.x, &p.y, &p.z, &p.intensity};
        for (double* f : fields) {
            *f = std::bit_cast<float>(get_le<std::uint32_t>(is));
        }
    }
    return cloud;
}

PointCloud quantize_points(const PointCloud& cloud) {
    PointCloud out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud[i];
        out[i] = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z),
                  static_cast<float>(p.intensity)};
    }
    return out;
}

std::string write_scene(const fs::path& dir, const ScenePair& pair) {
    const std::string stem = "scene_" + std::to_string(pair.scene_id);
    const std::string vfile = stem + "_vehicle.bin";
    const std::string ifile = stem + "_infra.bin";
    write_points(dir / vfile, pair.vehicle.cloud);
    write_points(dir / ifile, pair.infra.cloud);

    json boxes = json::array();
    for (const auto& b : pair.gt_boxes) {
        boxes.push_back(b.to_array());
    }
    const json manifest = {
        {"scene_id", pair.scene_id},
        {"placement_shortfall", pair.placement_shortfall},
        {"vehicle", {{"pose", pose_json(pair.vehicle.pose)}, {"reported_pose", pose_json(pair.vehicle.reported_pose)}, {"points", vfile}}},
        {"infra", {{"pose", pose_json(pair.infra.pose)}, {"reported_pose", pose_json(pair.infra.reported_pose)}, {"points", ifile}}},
        {"gt_boxes", boxes},
    };
    const std::string name = stem + ".json";
    std::ofstream os(dir / name, std::ios::trunc);
    if (!os) {
        fail(ErrorKind::Data, "cannot write manifest in " + dir.string());
    }
    os << manifest.dump(1) << '\n';
    return name;
}

ScenePair read_scene(const fs::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) {
        fail(ErrorKind::Data, "cannot open manifest: " + manifest_path.string());
    }
    json j;
    try {
        j = json::parse(is);
        ScenePair pair;
        const fs::path dir = manifest_path.parent_path();
        pair.scene_id = j.at("scene_id").get<std::uint64_t>();
        pair.placement_shortfall = j.value("placement_shortfall", false);
        auto agent = [&](const json& a, AgentFrame& f) {
            f.pose = pose_from_json(a.at("pose"));
            f.reported_pose = pose_from_json(a.at("reported_pose"));
            f.cloud = read_points(dir / a.at("points").get<std::string>());
        };
        agent(j.at("vehicle"), pair.vehicle);
        agent(j.at("infra"), pair.infra);
        for (const auto& b : j.at("gt_boxes")) {
            const auto v = b.get<std::vector<double>>();
            pair.gt_boxes.push_back(geom::Box3D::from_array(v));
        }
        return pair;
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "malformed manifest " + manifest_path.string() + ": " + e.what());
    }
}

std::size_t DatasetIndex::count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(scenes.begin(), scenes.end(), [&](const DatasetEntry& e) { return e.split == s; }));
}

std::vector<Split> assign_splits(const std::vector<std::uint64_t>& ids, std::uint64_t seed, double val_fraction) {
    const std::size_t n = ids.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> h(n);
    for (std::size_t k = 0; k < n; ++k) {
        h[k] = derive_seed(seed, "split", ids[k]);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return h[a] != h[b] ? h[a] < h[b] : ids[a] < ids[b];
    });
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n) + 1e-9));
    std::vector<Split> splits(n, Split::Train);
    for (std::size_t k = 0; k < n_val; ++k) {
        splits[order[k]] = Split::Val;
    }
    return splits;
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "val"; }

void write_index(const fs::path& dir, const DatasetIndex& index) {
    json scenes = json::array();
    for (const auto& e : index.scenes) {
        scenes.push_back({{"id", e.id}, {"manifest", e.manifest}, {"split", split_name(e.split)}});
    }
    const json j = {
        {"format", "dvx-dataset"},
        {"version", 1},
        {"seed", index.seed},
        {"num_train", index.count(Split::Train)},
        {"num_val", index.count(Split::Val)},
        {"scenes", scenes},
    };
    std::ofstream os(dir / "index.json", std::ios::trunc);
    if (!os) {
        fail(ErrorKind::Data, "cannot write dataset index in " + dir.string());
    }
    os << j.dump(1) << '\n';
}

DatasetIndex read_index(const fs::path& dir) {
    std::ifstream is(dir / "index.json");
    if (!is) {
        fail(ErrorKind::Data, "no dataset index in " + dir.string());
    }
    try {
        const json j = json::parse(is);
        DatasetIndex index;
        index.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("scenes")) {
            const std::string split = s.at("split").get<std::string>();
            if (split != "train" && split != "val") {
                fail(ErrorKind::Data, "unknown split '" + split + "'");
            }
            index.scenes.push_back({s.at("id").get<std::uint64_t>(), s.at("manifest").get<std::string>(),
                                    split == "train" ? Split::Train : Split::Val});
        }
        return index;
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, std::string("malformed dataset index: ") + e.what());
    }
}

std::vector<ScenePair> load_split(const fs::path& dir, Split split, int threads) {
    const DatasetIndex index = read_index(dir);
    std::vector<const DatasetEntry*> wanted;
    for (const auto& e : index.scenes) {
        if (e.split == split) {
            wanted.push_back(&e);
        }
    }
    std::vector<ScenePair> scenes(wanted.size());
    parallel_for(wanted.size(), threads, [&](std::size_t k) { scenes[k] = read_scene(dir / wanted[k]->manifest); });
    return scenes;
}

}  // namespace dvx::sim
