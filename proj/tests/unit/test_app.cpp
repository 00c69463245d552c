#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "plateflow/app/config.hpp"
#include "plateflow/app/jobs.hpp"
#include "plateflow/app/server.hpp"
#include "plateflow/app/training.hpp"
#include "plateflow/haar/model_io.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/synth/generator.hpp"

using namespace plateflow;
using namespace plateflow::app;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("plateflow_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

synth::SynthSpec fixture_spec() {
  synth::SynthSpec spec;
  spec.stream_id = "fixture";
  spec.seed = 21;
  spec.frames = 130;
  spec.events.push_back({4, 30, {40, 60, 120, 60}, {80, 90, 130, 65}, "ঢাকা মেট্রো-গ ১২-৩৪৫৬"});
  spec.events.push_back({56, 80, {250, 300, 100, 50}, {200, 320, 110, 55}, "খুলনা মেট্রো-ক ৯৮-৭৬৫৪"});
  spec.events.push_back({106, 125, {100, 200, 140, 70}, {120, 190, 150, 75}, "সিলেট মেট্রো-ত ১১-২২৩৩"});
  return spec;
}

/// A written 3-vehicle stream shared by the tests in this file.
const fs::path& fixture_stream() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "plateflow_app_fixture_stream";
    fs::remove_all(d);
    synth::write_stream(fixture_spec(), d);
    return d;
  }();
  return dir;
}

ServiceOptions options_for(const fs::path& data, double char_sub_rate = 0) {
  ServiceOptions o;
  o.data_dir = data;
  o.ocr = std::make_shared<ocr::MockOcr>(synth::make_manifest(fixture_spec()), ocr::ErrorModel{char_sub_rate, 1});
  return o;
}

int error_status(const std::function<void()>& f, std::string* code = nullptr) {
  try {
    f();
  } catch (const ServiceError& e) {
    if (code) *code = e.code;
    return e.http_status;
  }
  return 0;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("backbone strings") {
    CHECK(parse_backbone("oracle").kind == detect::DetectorConfig::Kind::Oracle);
    const auto sp = parse_backbone("subprocess:./det --fast");
    CHECK(sp.kind == detect::DetectorConfig::Kind::Subprocess);
    CHECK(sp.subprocess.command == "./det --fast");
    CHECK_THROWS_AS(parse_backbone("subprocess:"), ConfigError);
    CHECK_THROWS_AS(parse_backbone("yolo"), ConfigError);
  }

  TEST_CASE("pipeline config fields") {
    const auto dir = scratch("config");
    haar::CascadeModel m;
    m.features.push_back({haar::HaarKind::TwoRectHorizontal, 0, 0, 24, 12});
    m.stages.push_back({{{0, 0.0, 1, 1.0}}, 0.5});
    haar::save_cascade(dir / "gate.json", m);
    const auto c = pipeline_config_from_json(json::parse(R"({
      "gap": 30, "best_k": 2, "confidence_threshold": 0.6, "nms": true, "on_failure": "abort",
      "oracle": {"miss_rate": 0.1, "jitter_px": 2, "seed": 9, "confidence": {"lo": 0.55, "hi": 0.9}},
      "wakeup": {"cascade": "gate.json", "min_neighbors": 3}})"),
                                             dir);
    CHECK(c.gap_frames == 30);
    CHECK(c.best_k == 2);
    CHECK(c.backbone.confidence_threshold == 0.6);
    REQUIRE(c.backbone.nms.has_value());
    CHECK(c.backbone.nms->iou_thr == 0.4);
    CHECK(c.backbone.on_failure == detect::FailurePolicy::Abort);
    CHECK(c.backbone.oracle.confidence.kind == detect::ConfidenceLaw::Kind::Uniform);
    CHECK(c.backbone.oracle.confidence.lo == 0.55);
    CHECK(c.backbone.oracle.seed == 9);
    REQUIRE(c.wakeup.has_value());
    CHECK(c.wakeup->params.min_neighbors == 3);
    CHECK(c.wakeup->model.stages.size() == 1);
    CHECK(pipeline_config_from_json(json::parse(R"({"wakeup": "gate.json"})"), dir).wakeup.has_value());
    CHECK_FALSE(pipeline_config_from_json(json::parse(R"({"wakeup": false})")).wakeup.has_value());
    CHECK_THROWS_AS(pipeline_config_from_json(json::parse(R"({"gap": 0})")), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(json::parse(R"({"wakeup": "missing.json"})"), dir), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(json::parse(R"({"on_failure": "retry"})")), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(json::parse(R"({"gap": "x"})")), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(json::array()), ConfigError);
    fs::remove_all(dir);
  }

  TEST_CASE("training spec and patch directories") {
    const auto s = synth_training_from_json(json::parse(R"({"streams": 2, "max_stages": 4, "patch_seed": 8})"));
    CHECK(s.streams == 2);
    CHECK(s.targets.max_stages == 4);
    CHECK(s.sampling.seed == 8);
    CHECK(s.positives == 500);
    CHECK_THROWS_AS(synth_training_from_json(json::parse(R"({"streams": 0})")), ConfigError);

    const auto dir = scratch("patches");
    io::write_pgm(dir / "a.pgm", GrayFrame(24, 12, 10));
    io::write_png(dir / "b.png", Image(48, 24, 3, 200));
    io::write_text(dir / "notes.txt", "ignored");
    const auto patches = load_patch_dir(dir);
    REQUIRE(patches.size() == 2);
    CHECK(patches[0].at(3, 3) == 10);
    CHECK(patches[1].width == 24);
    CHECK(patches[1].height == 12);
    CHECK(patches[1].at(5, 5) == 200);
    CHECK_THROWS_AS(load_patch_dir(dir / "nope"), ConfigError);
    fs::remove_all(dir);
  }
}

TEST_SUITE("results store") {
  TEST_CASE("replay returns records in append order") {
    const auto dir = scratch("store");
    ResultsStore store(dir / "results.jsonl");
    CHECK(store.replay().empty());
    const ReviewRecord a{"job-1", 1, 2, "ঢাকা", "ঢাকা", Decision::Saved, "2026-01-01T00:00:00.000Z"};
    const ReviewRecord b{"job-1", 3, 1, "", "", Decision::Deleted, "2026-01-01T00:00:01.000Z"};
    store.append(a);
    store.append(b);
    CHECK(store.replay() == std::vector<ReviewRecord>{a, b});
    {
      std::ofstream torn(dir / "results.jsonl", std::ios::app);
      torn << R"({"v":1,"job_id":"job-1","inst)";
    }
    CHECK(store.replay() == std::vector<ReviewRecord>{a, b});
    {
      std::ofstream more(dir / "results.jsonl", std::ios::app);
      more << "\n" << record_to_json(a).dump() << "\n";
    }
    CHECK_THROWS_AS(store.replay(), ServiceError);
    CHECK(record_from_json(record_to_json(b)) == b);
    fs::remove_all(dir);
  }

  TEST_CASE("timestamps are ISO-8601 UTC") {
    const auto t = utc_timestamp();
    CHECK(t.size() == 24);
    CHECK(t[10] == 'T');
    CHECK(t.back() == 'Z');
  }
}

TEST_SUITE("job service") {
  TEST_CASE("lifecycle on the 3-vehicle fixture") {
    const auto data = scratch("lifecycle");
    JobService svc(options_for(data));
    const auto id = svc.submit({fixture_stream()});
    const auto first = svc.get(id);
    CHECK((first.status == JobStatus::Queued || first.status == JobStatus::Running));
    std::int64_t last = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto s = svc.get(id);
      CHECK(s.frames_processed >= last);
      last = s.frames_processed;
      if (s.status == JobStatus::Done) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    const auto done = svc.wait(id, std::chrono::seconds(60));
    REQUIRE(done.status == JobStatus::Done);
    CHECK(done.frames_processed == 130);
    CHECK(done.frames_total == 130);
    CHECK(done.stream_id == "fixture");

    const auto view = svc.job_view(id);
    REQUIRE(view.at("instances").size() == 3);
    for (const auto& inst : view.at("instances")) {
      CHECK(inst.at("candidates").size() <= 3);
      CHECK(inst.at("state") == "pending");
      for (const auto& c : inst.at("candidates")) {
        CHECK(c.at("url").get<std::string>().find("/api/v1/instances/" + id + "/") == 0);
        CHECK(c.at("ocr").is_null());
      }
    }
    const auto doc = svc.instances_document(id);
    CHECK(doc == io::read_text(data / "jobs" / id / "fixture" / "instances.json"));
    CHECK(json::parse(doc).at("instances").size() == 3);
    CHECK(io::read_png(svc.candidate_png(id, 2, 1)).height >= 150);

    const auto other = svc.submit({fixture_stream()});
    CHECK(other != id);
    CHECK(error_status([&] { svc.get("job-nope"); }) == 404);
    svc.wait(other, std::chrono::seconds(60));
    fs::remove_all(data);
  }

  TEST_CASE("invalid submissions create no job") {
    const auto data = scratch("invalid");
    JobService svc(options_for(data));
    const auto empty = scratch("empty_stream");
    std::string code;
    CHECK(error_status([&] { svc.submit({empty}); }, &code) == 400);
    CHECK(code == "invalid_stream");
    CHECK(error_status([&] { svc.submit({fixture_stream(), json{{"gap", 0}}}); }, &code) == 400);
    CHECK(code == "invalid_config");
    // Only stream.json: the default oracle backbone has no annotation to read.
    fs::copy_file(fixture_stream() / "stream.json", empty / "stream.json");
    CHECK(error_status([&] { svc.submit({empty}); }, &code) == 400);
    size_t jobs = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(data / "jobs")) ++jobs;
    CHECK(jobs == 0);
    fs::remove_all(empty);
    fs::remove_all(data);
  }

  TEST_CASE("review actions") {
    const auto data = scratch("review");
    const auto truth = synth::make_manifest(fixture_spec());
    std::string saved_job;
    {
      JobService svc(options_for(data));
      const auto id = svc.submit({fixture_stream()});
      saved_job = id;
      CHECK(error_status([&] { svc.select(id, 1, 1); }) == 409);
      REQUIRE(svc.wait(id, std::chrono::seconds(60)).status == JobStatus::Done);

      const auto view = svc.select(id, 1, 2);
      CHECK(view.at("chosen_rank") == 2);
      CHECK(view.at("candidates")[1].at("ocr").at("text") == *truth.lookup("fixture", 1));
      CHECK(view.at("candidates")[0].at("ocr").is_null());
      const auto rec = svc.save(id, 1);
      CHECK(rec.chosen_rank == 2);
      CHECK(rec.ocr_text == *truth.lookup("fixture", 1));
      CHECK(rec.ocr_text_normalized == ocr::normalize_bangla(rec.ocr_text));
      CHECK(rec.decision == Decision::Saved);
      CHECK(svc.save(id, 1) == rec);
      CHECK(error_status([&] { svc.select(id, 1, 1); }) == 409);
      CHECK(error_status([&] { svc.remove(id, 1); }) == 409);

      const auto del = svc.remove(id, 2);
      CHECK(del.decision == Decision::Deleted);
      CHECK(svc.remove(id, 2) == del);
      std::string code;
      CHECK(error_status([&] { svc.save(id, 2); }, &code) == 409);
      CHECK(code == "conflict");
      CHECK(error_status([&] { svc.select(id, 2, 1); }) == 409);
      CHECK(fs::exists(svc.candidate_png(id, 2, 1)));

      CHECK(error_status([&] { svc.select(id, 3, 4); }, &code) == 400);
      CHECK(code == "invalid");
      CHECK(error_status([&] { svc.select(id, 3, 0); }) == 400);
      CHECK(error_status([&] { svc.select(id, 9, 1); }) == 404);

      const auto listing = svc.job_view(id);
      REQUIRE(listing.at("instances").size() == 2);
      CHECK(listing.at("instances")[0].at("state") == "saved");
      CHECK(listing.at("instances")[1].at("id") == 3);
      CHECK(listing.at("deleted") == json::array({2}));
      CHECK(svc.results() == std::vector<ReviewRecord>{rec, del});
    }
    JobService restarted(options_for(data));
    const auto view = restarted.job_view(saved_job);
    CHECK(view.at("status") == "done");
    CHECK(view.at("instances").size() == 2);
    CHECK(view.at("instances")[0].at("state") == "saved");
    CHECK(view.at("instances")[0].at("chosen_rank") == 2);
    CHECK(restarted.save(saved_job, 1).chosen_rank == 2);
    CHECK(restarted.results().size() == 2);
    const auto fresh = restarted.submit({fixture_stream()});
    CHECK(fresh > saved_job);
    restarted.wait(fresh, std::chrono::seconds(60));
    fs::remove_all(data);
  }

  TEST_CASE("ocr is lazy and failures are reported") {
    const auto data = scratch("noocr");
    ServiceOptions o;
    o.data_dir = data;
    JobService svc(o);
    const auto id = svc.submit({fixture_stream()});
    REQUIRE(svc.wait(id, std::chrono::seconds(60)).status == JobStatus::Done);
    const auto view = svc.select(id, 3, 1);
    CHECK(view.at("candidates")[0].contains("ocr_error"));
    std::string code;
    CHECK(error_status([&] { svc.save(id, 3); }, &code) == 503);
    CHECK(code == "ocr_unavailable");
    CHECK(svc.results().empty());
    fs::remove_all(data);
  }

  TEST_CASE("failed stream marks the job failed") {
    const auto data = scratch("failed");
    const auto stream = scratch("broken_stream");
    for (const auto& e : fs::directory_iterator(fixture_stream())) fs::copy_file(e.path(), stream / e.path().filename());
    fs::remove(stream / "000050.pgm");
    JobService svc(options_for(data));
    const auto id = svc.submit({stream});
    const auto s = svc.wait(id, std::chrono::seconds(60));
    CHECK(s.status == JobStatus::Failed);
    CHECK(s.error.find("000050") != std::string::npos);
    CHECK(error_status([&] { svc.instances_document(id); }) == 409);
    fs::remove_all(stream);
    fs::remove_all(data);
  }

  TEST_CASE("options from the environment") {
    const auto data = scratch("env");
    ocr::MockOcrServer mock(synth::make_manifest(fixture_spec()), {});
    ::setenv("PLATEFLOW_DATA_DIR", data.c_str(), 1);
    ::setenv("PLATEFLOW_OCR_URL", mock.base_url().c_str(), 1);
    auto o = service_options_from_env();
    CHECK(o.data_dir == data);
    REQUIRE(o.ocr != nullptr);
    CHECK(o.ocr->name() == "http");
    CHECK(service_options_from_env("/elsewhere").data_dir == fs::path("/elsewhere"));
    ::unsetenv("PLATEFLOW_OCR_URL");
    CHECK(service_options_from_env().ocr == nullptr);
    ::unsetenv("PLATEFLOW_DATA_DIR");

    JobService svc(std::move(o));
    const auto id = svc.submit({fixture_stream()});
    REQUIRE(svc.wait(id, std::chrono::seconds(60)).status == JobStatus::Done);
    CHECK(svc.save(id, 3).ocr_text == "সিলেট মেট্রো-ত ১১-২২৩৩");
    CHECK(mock.requests() == 1);
    fs::remove_all(data);
  }
}

TEST_SUITE("http api") {
  TEST_CASE("review flow over HTTP") {
    const auto data = scratch("http");
    JobService svc(options_for(data));
    ApiServer api(svc);
    httplib::Client client(api.base_url());

    auto res = client.Post("/api/v1/jobs", json{{"stream", fixture_stream().string()}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    const auto id = json::parse(res->body).at("job_id").get<std::string>();
    json job;
    for (int i = 0; i < 3000; ++i) {
      res = client.Get("/api/v1/jobs/" + id);
      REQUIRE(res);
      job = json::parse(res->body);
      if (job.at("status") == "done") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(job.at("status") == "done");
    REQUIRE(job.at("instances").size() == 3);

    res = client.Get("/api/v1/jobs/" + id + "/instances");
    REQUIRE(res);
    CHECK(res->body == io::read_text(data / "jobs" / id / "fixture" / "instances.json"));

    res = client.Get(job.at("instances")[0].at("candidates")[1].at("url").get<std::string>());
    REQUIRE(res);
    CHECK(res->get_header_value("Content-Type") == "image/png");
    const auto png = io::decode_png(std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
    CHECK(png.height >= 150);

    res = client.Post("/api/v1/instances/" + id + "/1/select", R"({"rank":2})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("chosen_rank") == 2);
    res = client.Post("/api/v1/instances/" + id + "/1/save", "", "application/json");
    REQUIRE(res);
    const auto rec = json::parse(res->body);
    CHECK(rec.at("chosen_rank") == 2);
    CHECK(rec.at("ocr_text") == "ঢাকা মেট্রো-গ ১২-৩৪৫৬");
    CHECK(rec.at("decision") == "saved");

    res = client.Delete("/api/v1/instances/" + id + "/3");
    REQUIRE(res);
    CHECK(json::parse(res->body).at("decision") == "deleted");
    res = client.Post("/api/v1/instances/" + id + "/3/save", "", "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(json::parse(res->body).at("error").at("code") == "conflict");
    job = json::parse(client.Get("/api/v1/jobs/" + id)->body);
    CHECK(job.at("instances").size() == 2);

    res = client.Get("/api/v1/results");
    REQUIRE(res);
    const auto results = json::parse(res->body).at("results");
    REQUIRE(results.size() == 2);
    CHECK(results[0].at("chosen_rank") == 2);
    CHECK(results[1].at("decision") == "deleted");

    res = client.Post("/api/v1/instances/" + id + "/2/select", R"({"rank":7})", "application/json");
    CHECK(res->status == 400);
    res = client.Post("/api/v1/instances/" + id + "/2/select", R"({"rank":"x"})", "application/json");
    CHECK(res->status == 400);
    res = client.Post("/api/v1/instances/" + id + "/2/select", "{", "application/json");
    CHECK(res->status == 400);
    CHECK(json::parse(res->body).at("error").at("code") == "bad_json");
    res = client.Get("/api/v1/jobs/job-000999-00000000");
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).at("error").at("code") == "not_found");
    res = client.Get("/api/v1/instances/" + id + "/1/candidates/9.png");
    CHECK(res->status == 404);
    res = client.Get("/api/v1/nowhere");
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).at("error").at("code") == "not_found");
    res = client.Post("/api/v1/jobs", R"({"stream":"/no/such/dir"})", "application/json");
    CHECK(res->status == 400);
    CHECK(json::parse(res->body).at("error").at("code") == "invalid_stream");
    api.stop();
    fs::remove_all(data);
  }

  TEST_CASE("multipart upload") {
    const auto data = scratch("upload");
    JobService svc(options_for(data));
    ApiServer api(svc);
    httplib::Client client(api.base_url());
    httplib::MultipartFormDataItems items;
    for (const auto& e : fs::directory_iterator(fixture_stream())) {
      const auto name = e.path().filename().string();
      items.push_back({"file-" + name, io::read_text(e.path()), name, "application/octet-stream"});
    }
    items.push_back({"config", R"({"best_k": 1})", "", "application/json"});
    auto res = client.Post("/api/v1/jobs", items);
    REQUIRE(res);
    REQUIRE(res->status == 202);
    const auto id = json::parse(res->body).at("job_id").get<std::string>();
    REQUIRE(svc.wait(id, std::chrono::seconds(60)).status == JobStatus::Done);
    const auto view = svc.job_view(id);
    REQUIRE(view.at("instances").size() == 3);
    CHECK(view.at("instances")[0].at("candidates").size() == 1);

    httplib::MultipartFormDataItems bad{{"f", "x", "../escape.json", "text/plain"}};
    res = client.Post("/api/v1/jobs", bad);
    REQUIRE(res);
    CHECK(res->status == 400);
    api.stop();
    fs::remove_all(data);
  }
}
