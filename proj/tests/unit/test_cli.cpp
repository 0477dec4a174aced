// Copyright 2026 The mrlda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mrlda/model_io.hpp"
#include "mrlda/text_format.hpp"

namespace fs = std::filesystem;

namespace {

struct WorkDir {
  fs::path path = fs::temp_directory_path() / ("mrlda_cli_" + std::to_string(::getpid()));
  WorkDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~WorkDir() { fs::remove_all(path); }
} work;

const fs::path& work_dir() { return work.path; }

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
  const std::string cmd = std::string(MRLDA_CLI_PATH) + " " + args + " > " + stdout_file + " 2>>" +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return mrlda::text::read_file_text(p); }

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

// Two planted topics over disjoint word sets.
fs::path raw_corpus() {
  const auto path = work_dir() / "raw.tsv";
  if (fs::exists(path)) return path;
  std::mt19937_64 rng(2);
  std::ostringstream s;
  const char* a[] = {"apple", "banana", "cherry", "grape", "lemon"};
  const char* b[] = {"engine", "wheel", "brake", "clutch", "piston"};
  for (int d = 0; d < 40; ++d) {
    s << d << "\txx\t";
    for (int n = 0; n < 30; ++n) {
      const bool first = (rng() % 10) < (d % 2 ? 10u : 0u);
      s << (first ? a[rng() % 5] : b[rng() % 5]) << ' ';
    }
    s << '\n';
  }
  write(path, s.str());
  return path;
}

std::string p(const fs::path& x) { return x.string(); }

}  // namespace

TEST_CASE("preprocess writes corpus and vocabulary deterministically") {
  const auto out1 = work_dir() / "c1", out2 = work_dir() / "c2";
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(out1) + " --min-df 2", p(work_dir() / "summary.txt")) == 0);
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(out2) + " --min-df 2") == 0);
  CHECK(slurp(out1 / "corpus.tsv") == slurp(out2 / "corpus.tsv"));
  CHECK(slurp(out1 / "vocab.tsv") == slurp(out2 / "vocab.tsv"));
  const auto summary = slurp(work_dir() / "summary.txt");
  CHECK(summary.find("documents\t40") != std::string::npos);
  CHECK(summary.find("vocabulary\txx\t10") != std::string::npos);
}

TEST_CASE("malformed input exits with 2") {
  const auto bad = work_dir() / "bad.tsv";
  write(bad, "0\txx\tfine\nbroken line without tabs\n");
  CHECK(run("preprocess --input " + p(bad) + " --out " + p(work_dir() / "bad_out")) == 2);
  CHECK(slurp(work_dir() / "stderr.txt").find("line 2") != std::string::npos);
  CHECK(run("train --input " + p(work_dir() / "nowhere") + " --out " + p(work_dir() / "m") + " --topics 2") == 2);
  CHECK(run("train --topics 0 --input x --out y") == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("train, topics, infer") {
  const auto corpus = work_dir() / "c1";
  const auto model = work_dir() / "model";
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(corpus)) == 0);
  REQUIRE(run("train --input " + p(corpus) + " --out " + p(model) + " --topics 2 --seed 7 --workers 2 --init documents") == 0);
  for (const char* f : {"beta.xx.final.tsv", "alpha.final.tsv", "gamma.final.tsv", "elbo.tsv", "config.json",
                        "checkpoints/beta.xx.1.tsv", "checkpoints/metrics.1.json"}) {
    CHECK(fs::exists(model / f));
  }

  SUBCASE("rerunning from config.json reproduces the model") {
    const auto again = work_dir() / "model_again";
    REQUIRE(run("train --config " + p(model / "config.json") + " --out " + p(again)) == 0);
    for (const char* f : {"beta.xx.final.tsv", "lambda.xx.final.tsv", "alpha.final.tsv", "gamma.final.tsv", "elbo.tsv"}) {
      CHECK(slurp(model / f) == slurp(again / f));
    }
  }

  SUBCASE("topics output is deterministic and separates the planted sets") {
    REQUIRE(run("topics --input " + p(model) + " --top-n 5", p(work_dir() / "t1.txt")) == 0);
    REQUIRE(run("topics --input " + p(model) + " --top-n 5", p(work_dir() / "t2.txt")) == 0);
    const auto t = slurp(work_dir() / "t1.txt");
    CHECK(t == slurp(work_dir() / "t2.txt"));
    std::istringstream in(t);
    std::string line;
    int lines = 0;
    std::string first_topic_words;
    while (std::getline(in, line)) {
      ++lines;
      if (line.rfind("xx\t0\t", 0) == 0) first_topic_words += line.substr(line.find('\t', 5)) + " ";
    }
    CHECK(lines == 10);
    const bool fruit = first_topic_words.find("apple") != std::string::npos;
    for (const char* w : {"apple", "banana", "cherry", "grape", "lemon"}) {
      CHECK((first_topic_words.find(w) != std::string::npos) == fruit);
    }
  }

  SUBCASE("infer on held-out documents") {
    const auto held = work_dir() / "held.tsv";
    write(held, "100\txx\tapple banana apple\n101\txx\tspaceship\n");
    const auto out = work_dir() / "gamma.tsv";
    REQUIRE(run("infer --model " + p(model) + " --input " + p(held) + " --out " + p(out)) == 0);
    std::istringstream in(slurp(out));
    const auto g = mrlda::read_gammas(in);
    REQUIRE(g.size() == 1);
    CHECK(g[0].doc_id == 100);
    CHECK(slurp(work_dir() / "stderr.txt").find("101") != std::string::npos);

    const auto empty = work_dir() / "empty.tsv";
    write(empty, "");
    const auto empty_out = work_dir() / "empty_gamma.tsv";
    CHECK(run("infer --model " + p(model) + " --input " + p(empty) + " --out " + p(empty_out)) == 0);
    CHECK(fs::exists(empty_out));
    CHECK(slurp(empty_out).empty());

    CHECK(run("infer --model " + p(corpus) + " --input " + p(held) + " --out " + p(out)) == 2);
  }
}

TEST_CASE("serial flag and polylingual mode") {
  const auto corpus = work_dir() / "c1";
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(corpus)) == 0);
  const auto model = work_dir() / "serial_model";
  REQUIRE(run("train --input " + p(corpus) + " --out " + p(model) + " --topics 2 --serial") == 0);
  CHECK(fs::exists(model / "serial.beta.xx.final.tsv"));
  CHECK(fs::exists(model / "serial.elbo.tsv"));
  CHECK(run("topics --input " + p(model) + " --serial") == 0);

  const auto raw = work_dir() / "bi.tsv";
  write(raw, "0\ten\tdog cat dog\n0\tde\thund katze\n1\ten\tcar road\n1\tde\tauto strasse\n");
  const auto bi = work_dir() / "bi";
  REQUIRE(run("preprocess --input " + p(raw) + " --out " + p(bi)) == 0);
  CHECK(run("train --input " + p(bi) + " --out " + p(work_dir() / "bi_mono") + " --topics 2") == 2);
  const auto poly = work_dir() / "bi_model";
  REQUIRE(run("train --input " + p(bi) + " --out " + p(poly) + " --topics 2 --mode poly --languages en,de") == 0);
  CHECK(fs::exists(poly / "beta.en.final.tsv"));
  CHECK(fs::exists(poly / "beta.de.final.tsv"));
}

TEST_CASE("non-convergence exits with 3") {
  const auto corpus = work_dir() / "c1";
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(corpus)) == 0);
  CHECK(run("train --input " + p(corpus) + " --out " + p(work_dir() / "short") + " --topics 2 --max-iter 1") == 3);
}

TEST_CASE("single-topic model ranks terms by corpus frequency") {
  const auto raw = work_dir() / "freq.tsv";
  write(raw, "0\txx\tzeta zeta zeta alpha beta beta\n1\txx\tzeta beta gamma\n");
  const auto corpus = work_dir() / "freq";
  const auto model = work_dir() / "freq_model";
  REQUIRE(run("preprocess --input " + p(raw) + " --out " + p(corpus)) == 0);
  REQUIRE(run("train --input " + p(corpus) + " --out " + p(model) + " --topics 1") == 0);
  REQUIRE(run("topics --input " + p(model) + " --top-n 4", p(work_dir() / "freq_topics.txt")) == 0);
  std::istringstream in(slurp(work_dir() / "freq_topics.txt"));
  std::string line, order;
  while (std::getline(in, line)) order += std::string(mrlda::text::split(line, '\t').at(3)) + " ";
  CHECK(order == "zeta beta alpha gamma ");
}

TEST_CASE("prior file seeds topics") {
  const auto corpus = work_dir() / "c1";
  REQUIRE(run("preprocess --input " + p(raw_corpus()) + " --out " + p(corpus)) == 0);
  const auto dict = work_dir() / "prior.tsv";
  write(dict, "fruit\tapple banana cher*\n");
  const auto model = work_dir() / "prior_model";
  REQUIRE(run("train --input " + p(corpus) + " --out " + p(model) + " --topics 2 --prior-file " + p(dict)) == 0);
  REQUIRE(run("topics --input " + p(model) + " --top-n 5", p(work_dir() / "prior_topics.txt")) == 0);
  const auto t = slurp(work_dir() / "prior_topics.txt");
  std::istringstream in(t);
  std::string line;
  std::set<std::string> seeded;
  while (std::getline(in, line)) {
    if (line.rfind("xx\t0\t", 0) == 0) seeded.emplace(mrlda::text::split(line, '\t').at(3));
  }
  for (const char* w : {"apple", "banana", "cherry"}) CHECK(seeded.count(w) == 1);
  CHECK(run("train --input " + p(corpus) + " --out " + p(model) + " --topics 2 --prior-file " + p(work_dir() / "none.tsv")) == 2);
}
