#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "phocal/errors.hpp"
#include "phocal/io.hpp"
#include "phocal/serialize.hpp"
#include "support.hpp"

using namespace phocal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("phocal_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "phocal");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

template <typename T, typename W>
std::string written(W writer, const T& value) {
    std::ostringstream s;
    writer(s, value);
    return s.str();
}

bool same(const Pose3d& a, const Pose3d& b) {
    return a.translation == b.translation && a.rotation.quaternion().coeffs() == b.rotation.quaternion().coeffs();
}

}  // namespace

TEST_CASE("text formats round-trip exactly") {
    RngStream rng(1);
    std::vector<Pose3d> poses;
    for (int i = 0; i < 20; ++i) poses.push_back(test::random_pose(rng));

    std::istringstream pin(written<std::vector<Pose3d>>(
        [](std::ostream& o, const std::vector<Pose3d>& v) { io::write_poses(o, v); }, poses));
    const auto back = io::read_poses(pin, "poses");
    REQUIRE(back.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) CHECK(same(back[i], poses[i]));

    std::vector<Point3d> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(test::random_pose(rng).translation);
    std::ostringstream ps;
    io::write_points(ps, pts);
    std::istringstream pts_in(ps.str());
    CHECK(io::read_points(pts_in, "pts") == pts);

    MarkerBoard board;
    for (int i = 0; i < 12; ++i) {
        board.board_points.push_back(pts[i]);
        board.measured_points.push_back(pts[i + 1]);
    }
    std::ostringstream bs;
    io::write_board(bs, board);
    std::istringstream bin(bs.str());
    const MarkerBoard b2 = io::read_board(bin, "board");
    CHECK(b2.board_points == board.board_points);
    CHECK(b2.measured_points == board.measured_points);

    std::vector<HandEyeView> views;
    for (int i = 0; i < 5; ++i) views.push_back({poses[i], poses[i + 5]});
    std::ostringstream vs;
    io::write_views(vs, views);
    std::istringstream vin(vs.str());
    const auto v2 = io::read_views(vin, "views");
    REQUIRE(v2.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(same(v2[i].ee_pose, views[i].ee_pose));
        CHECK(same(v2[i].marker_in_cam, views[i].marker_in_cam));
    }

    Correspondences c{{pts[0], pts[1], pts[2]}, {pts[3], pts[4], pts[5]}};
    std::ostringstream cs;
    io::write_correspondences(cs, c);
    std::istringstream cin_(cs.str());
    const Correspondences c2 = io::read_correspondences(cin_, "corr");
    CHECK(c2.model == c.model);
    CHECK(c2.measured == c.measured);

    std::vector<Detection> boxes;
    for (int i = 0; i < 4; ++i) {
        Detection d;
        d.category = kCategories[i];
        d.score = rng.uniform();
        d.box.center = pts[i];
        d.box.half_extents = Eigen::Vector3d(rng.uniform(1, 9), rng.uniform(1, 9), rng.uniform(1, 9));
        d.box.rotation = random_rotation(rng);
        boxes.push_back(d);
    }
    std::ostringstream xs;
    io::write_boxes_csv(xs, boxes);
    std::istringstream xin(xs.str());
    const auto x2 = io::read_boxes_csv(xin, "boxes");
    REQUIRE(x2.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(x2[i].category == boxes[i].category);
        CHECK(x2[i].score == boxes[i].score);
        CHECK(x2[i].box.center == boxes[i].box.center);
        CHECK(x2[i].box.half_extents == boxes[i].box.half_extents);
        CHECK(x2[i].box.rotation.quaternion().coeffs() == boxes[i].box.rotation.quaternion().coeffs());
    }
}

TEST_CASE("text format errors carry file and line") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return io::read_poses(in, "p.txt");
    };
    CHECK_THROWS_WITH_AS(parse("convention=p->R*p+t\n1 0 0 0 1 2 3\n"), doctest::Contains("units=mm"), ParseError);
    CHECK_THROWS_WITH_AS(parse("units=m\nconvention=p->R*p+t\n"), doctest::Contains("p.txt:1"), ParseError);
    CHECK_THROWS_AS(parse("units=mm\nconvention=p->R^T*p\n"), ParseError);
    CHECK_THROWS_AS(parse("units=mm\n1 0 0 0 1 2 3\n"), ParseError);
    CHECK_THROWS_AS(parse("units=mm\nconvention=p->R*p+t\ncolor=red\n"), ParseError);
    CHECK_THROWS_AS(parse("units=mm\nunits=mm\nconvention=p->R*p+t\n"), ParseError);
    CHECK_THROWS_WITH_AS(parse("units=mm\nconvention=p->R*p+t\n1 0 0 0 1 2\n"), doctest::Contains("p.txt:3"),
                         ParseError);
    CHECK_THROWS_AS(parse("units=mm\nconvention=p->R*p+t\n1 0 0 0 1 2 nan\n"), ParseError);
    CHECK_THROWS_AS(parse("units=mm\nconvention=p->R*p+t\n1 0 0 0 1 2 3\nunits=mm\n"), ParseError);
    // non-unit quaternions are rejected, not silently normalized
    CHECK_THROWS_WITH_AS(parse("units=mm\nconvention=p->R*p+t\n0.9 0 0 0 1 2 3\n"), doctest::Contains("quaternion"),
                         ParseError);
    CHECK_NOTHROW(parse("units=mm\nconvention=p->R*p+t\n# comment\n\n1.0000001 0 0 0 1 2 3\n"));
    CHECK(parse("units=mm\nconvention=p->R*p+t\n").empty());

    std::istringstream bad_csv("category,score\nbox,1\n");
    CHECK_THROWS_AS(io::read_boxes_csv(bad_csv, "b.csv"), ParseError);
    std::istringstream flat("category,score,cx,cy,cz,hx,hy,hz,qw,qx,qy,qz\nbox,1,0,0,0,1,0,1,1,0,0,0\n");
    CHECK_THROWS_AS(io::read_boxes_csv(flat, "b.csv"), ParseError);
    CHECK_THROWS_AS(io::read_file("/nonexistent/poses.txt", io::read_poses), ValidationError);
}

TEST_CASE("JSON forms") {
    RngStream rng(2);
    SceneConfig scene = generate_scene("phocal-like", rng);
    const SceneConfig back = io::scene_from_json(io::parse_json(io::dump(io::to_json(scene)), "scene.json"));
    CHECK(io::dump(io::to_json(back)) == io::dump(io::to_json(scene)));
    REQUIRE(back.objects.size() == scene.objects.size());
    CHECK(same(back.objects[0].obj_to_base, scene.objects[0].obj_to_base));

    io::json j = io::to_json(scene);
    j["units"] = "m";
    CHECK_THROWS_AS(io::scene_from_json(j), ValidationError);
    j = io::to_json(scene);
    j["objects"] = io::json::array();
    CHECK_THROWS_AS(io::scene_from_json(j), ValidationError);

    NoiseSpec n;
    n.handeye_target_rmse_mm = {0.5, 0.0, 1.5};
    const NoiseSpec n2 = io::noise_from_json(io::to_json(n));
    CHECK(n2.handeye_target_rmse_mm == n.handeye_target_rmse_mm);
    io::json nj = io::to_json(n);
    nj["bogus"] = 1;
    CHECK_THROWS_AS(io::noise_from_json(nj), ValidationError);

    IcpParams p;
    p.max_iterations = 7;
    p.max_correspondence_mm = 3.5;
    const IcpParams p2 = io::icp_params_from_json(io::to_json(p));
    CHECK(p2.max_iterations == 7);
    CHECK(p2.max_correspondence_mm == 3.5);
    CHECK(std::isinf(io::icp_params_from_json(io::to_json(IcpParams{})).max_correspondence_mm));
    CHECK_THROWS_AS(io::icp_params_from_json(io::json{{"max_iter", 3}}), ValidationError);

    SimReport r;
    r.seed = 9;
    r.object_noise.push_back({"o", test::random_pose(rng)});
    CameraSeries c;
    c.camera = "rgbd";
    c.handeye_target_rmse = 0.89;
    c.handeye_achieved_rmse = 0.8812345678901234;
    c.objects.push_back({"o", {0.1, 0.2, 0.30000000000000004}, 0.2});
    c.overall_rmse = 0.2;
    r.cameras.push_back(c);
    const std::string text = io::dump(io::to_json(r));
    CHECK(io::dump(io::to_json(io::sim_report_from_json(io::parse_json(text, "r.json")))) == text);
    CHECK(io::sim_report_csv(r).rfind("camera,object,frame,rmse_mm\n", 0) == 0);

    CHECK_THROWS_WITH_AS(io::parse_json("{\n\"a\": 1,\n}", "x.json"), doctest::Contains("x.json:3"), ParseError);

    io::RunManifest m;
    m.command = "simulate";
    m.params["draws"] = "25";
    m.seed = 7;
    m.timestamp = "2026-01-01T00:00:00Z";
    CHECK(!io::to_json(m, false).contains("timestamp"));
    const io::RunManifest m2 = io::manifest_from_json(io::to_json(m, true));
    CHECK(m2.seed == m.seed);
    CHECK(m2.params == m.params);
    CHECK(m2.timestamp == m.timestamp);
}

TEST_CASE("sha256") {
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("command line") {
    TempDir tmp;

    SUBCASE("help and usage") {
        CHECK(invoke({"--help"}).code == cli::kExitOk);
        CHECK(invoke({}).code == cli::kExitValidation);
        CHECK(invoke({"frobnicate"}).code == cli::kExitValidation);
        CHECK(invoke({"pivot-calib", tmp.at("missing.txt")}).code == cli::kExitValidation);
    }
    SUBCASE("pivot-calib") {
        RngStream rng(3);
        const auto poses = test::pivot_poses(Point3d(17, -2, 55), Point3d(512, -73, 208), 20, 40.0, rng);
        std::ostringstream s;
        io::write_poses(s, poses);
        const auto good = tmp.file("poses.txt", s.str());
        const Run r = invoke({"pivot-calib", good, "--out", tmp.at("pivot.json")});
        CHECK(r.code == cli::kExitOk);
        const io::json j = io::parse_json(io::slurp(tmp.at("pivot.json")), "pivot.json");
        CHECK(j["tip_offset"][2].get<double>() == doctest::Approx(55.0).epsilon(1e-9));
        CHECK(j.at("manifest").at("input_sha256").at(good) == io::file_sha256(good));
        CHECK(!j["manifest"].contains("timestamp"));
        CHECK(io::parse_json(io::slurp(tmp.at("pivot.json.manifest.json")), "m").contains("timestamp"));

        std::ostringstream same_pose;
        io::write_poses(same_pose, std::vector<Pose3d>(10, poses[0]));
        const Run d = invoke({"pivot-calib", tmp.file("same.txt", same_pose.str())});
        CHECK(d.code == cli::kExitDegenerate);
        CHECK(d.err.find("degenerate") != std::string::npos);

        const Run m = invoke({"pivot-calib", tmp.file("bad.txt", "units=mm\nconvention=p->R*p+t\n1 2 3\n")});
        CHECK(m.code == cli::kExitValidation);
        CHECK(m.err.find("bad.txt:3") != std::string::npos);
    }
    SUBCASE("eval-iou with ground truth as predictions") {
        RngStream rng(4);
        std::vector<Detection> boxes;
        for (int i = 0; i < 8; ++i) {
            Detection d;
            d.category = kCategories[i % 3];
            d.score = 1.0;
            d.box.center = Point3d(100.0 * i, 0, 0);
            d.box.half_extents = Eigen::Vector3d(10, 20, 30);
            d.box.rotation = random_rotation(rng);
            boxes.push_back(d);
        }
        std::ostringstream s;
        io::write_boxes_csv(s, boxes);
        const auto f = tmp.file("gt.csv", s.str());
        const Run r = invoke({"eval-iou", f, f, "--threshold", "0.5", "--out", tmp.at("ap.json")});
        CHECK(r.code == cli::kExitOk);
        const io::json j = io::parse_json(io::slurp(tmp.at("ap.json")), "ap.json");
        CHECK(j.at("mean_ap").get<double>() == doctest::Approx(1.0));
        CHECK(invoke({"eval-iou", f, f, "--threshold", "1.5"}).code == cli::kExitValidation);
    }
    SUBCASE("simulate is byte-identical for a fixed seed") {
        const std::vector<std::string> args = {"simulate", "--template", "phocal-like", "--seed", "7",
                                               "--draws", "2", "--samples", "200", "--out"};
        auto a = args, b = args;
        a.push_back(tmp.at("a.json"));
        b.push_back(tmp.at("b.json"));
        REQUIRE(invoke(a).code == cli::kExitOk);
        REQUIRE(invoke(b).code == cli::kExitOk);
        CHECK(io::slurp(tmp.at("a.json")) == io::slurp(tmp.at("b.json")));
        CHECK(io::slurp(tmp.at("a.csv")) == io::slurp(tmp.at("b.csv")));
        CHECK(io::slurp(tmp.at("a.csv")).rfind("# manifest {", 0) == 0);

        // the embedded scene runs again from a file
        const io::json rep = io::parse_json(io::slurp(tmp.at("a.json")), "a.json");
        const auto scene = tmp.file("scene.json", io::dump(rep["scene"]));
        const Run r = invoke({"simulate", scene, "--seed", "7", "--draws", "1", "--samples", "200"});
        CHECK(r.code == cli::kExitOk);
        CHECK(r.out.find("(simulated)") != std::string::npos);

        CHECK(invoke({"simulate", "--template", "nope", "--seed", "1"}).code == cli::kExitValidation);
        CHECK(invoke({"simulate", "--seed", "1"}).code == cli::kExitValidation);
    }
    SUBCASE("gen-scene") {
        const Run a = invoke({"gen-scene", "--seed", "5"});
        const Run b = invoke({"gen-scene", "--seed", "5"});
        CHECK(a.code == cli::kExitOk);
        CHECK(a.out == b.out);
        CHECK(io::scene_from_json(io::parse_json(a.out, "stdout")).objects.size() >= 5);
    }
}
