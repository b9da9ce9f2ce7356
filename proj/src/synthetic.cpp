// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/synthetic.hpp"

#include <array>
#include <set>

#include "gadgetforge/error.hpp"
#include "gadgetforge/rng.hpp"

namespace gadgetforge {

namespace {

constexpr std::array<const char*, 12> kInts{"count", "len", "idx", "total", "flag", "size",
                                           "offset", "tmp", "value", "n", "k", "pos"};
constexpr std::array<const char*, 6> kBufs{"buf", "dest", "name", "line", "path", "out"};
constexpr std::array<const char*, 5> kSrcs{"src", "input", "data", "str", "arg"};
constexpr std::array<const char*, 5> kCategories{"BE", "RME", "AFC", "AE", "AU"};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.below(N)];
}

std::string num(Rng& rng, std::uint64_t lo, std::uint64_t hi) { return std::to_string(lo + rng.below(hi - lo + 1)); }

struct Motif {
  std::string api;
  std::vector<std::string> lines;
};

Motif make_motif(std::size_t cls, const std::string& src, Rng& rng) {
  const std::string buf = pick(rng, kBufs);
  const std::string size = num(rng, 8, 64);
  switch (cls) {
    case 0:
      return {"strncpy",
              {"char " + buf + "[" + size + "];", "if (strlen(" + src + ") < sizeof(" + buf + "))",
               "strncpy(" + buf + ", " + src + ", sizeof(" + buf + ") - 1);"}};
    case 1:
      return {"strcpy", {"char " + buf + "[" + size + "];", "strcpy(" + buf + ", " + src + ");"}};
    case 2: {
      const std::string p = "p" + pick(rng, kBufs);
      return {"free", {"char *" + p + " = malloc(" + size + ");", "free(" + p + ");", "free(" + p + ");"}};
    }
    case 3:
      return {"memcpy",
              {"char " + buf + "[" + size + "];",
               "memcpy(" + buf + ", " + src + ", strlen(" + src + ") + " + num(rng, 1, 9) + ");"}};
    case 4: {
      const std::string i = pick(rng, kInts);
      return {"malloc", {"int " + i + " = atoi(" + src + ");", "char *" + buf + " = malloc(" + i + " * " + size + ");"}};
    }
    default: {
      const std::string i = pick(rng, kInts);
      return {"memset",
              {"char " + buf + "[" + size + "];", "int " + i + " = atoi(" + src + ");",
               "memset(" + buf + ", 0, " + i + ");", buf + "[" + i + "] = 0;"}};
    }
  }
}

std::string filler(Rng& rng) {
  const std::string a = pick(rng, kInts);
  const std::string b = pick(rng, kInts);
  switch (rng.below(6)) {
    case 0: return "int " + a + " = " + num(rng, 0, 999) + ";";
    case 1: return a + " = " + b + " + " + num(rng, 1, 999) + ";";
    case 2: return "printf(\"%d\\n\", " + a + ");";
    case 3: return "if (" + a + " > " + num(rng, 0, 999) + ")";
    case 4: return a + "++;";
    default: return "long " + a + "_" + num(rng, 0, 99) + " = " + b + " * " + num(rng, 2, 999) + ";";
  }
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

}  // namespace

std::size_t max_synthetic_classes() { return kCategories.size() + 1; }

std::string synthetic_category(std::size_t c) {
  if (c == 0 || c > kCategories.size()) throw Error(Errc::ConfigMismatch, "no synthetic category for class", c);
  return kCategories[c - 1];
}

std::vector<GadgetRecord> generate(const GeneratorSpec& spec) {
  if (spec.classes < 2 || spec.classes > max_synthetic_classes()) {
    throw Error(Errc::ConfigMismatch, "synthetic class count must be in 2.." + std::to_string(max_synthetic_classes()));
  }
  if (spec.min_noise > spec.max_noise) throw Error(Errc::ConfigMismatch, "min_noise exceeds max_noise");

  std::vector<GadgetRecord> out;
  std::set<std::string> seen;
  Rng rng(spec.seed);
  for (std::size_t cls = 0; cls < spec.classes; ++cls) {
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      // Redraw until the full body is new, so the corpus has no duplicates.
      // The draws do not depend on include_motif, so the ablated corpus is
      // the same records minus their motif lines.
      std::vector<std::string> body, full;
      std::string api;
      do {
        const std::string src = pick(rng, kSrcs);
        const Motif motif = make_motif(cls, src, rng);
        api = motif.api;
        const std::size_t noise = spec.min_noise + rng.below(spec.max_noise - spec.min_noise + 1);
        std::vector<std::string> fill;
        for (std::size_t i = 0; i < noise; ++i) fill.push_back(filler(rng));
        // Motif lines keep their order; filler is spread around them.
        std::vector<bool> is_motif(noise + motif.lines.size(), false);
        for (std::size_t m = 0; m < motif.lines.size(); ++m) {
          std::size_t slot = rng.below(is_motif.size());
          while (is_motif[slot]) slot = rng.below(is_motif.size());
          is_motif[slot] = true;
        }
        body = {"const char *" + src + " = argv[" + num(rng, 1, 3) + "];"};
        full = body;
        std::size_t f = 0, m = 0;
        for (bool mm : is_motif) {
          if (mm) {
            const std::string& line = motif.lines[m++];
            full.push_back(line);
            if (spec.include_motif) body.push_back(line);
          } else {
            full.push_back(fill[f]);
            body.push_back(fill[f++]);
          }
        }
      } while (!seen.insert(join_lines(full)).second);

      GadgetRecord r;
      r.id = out.size() + 1;
      const std::string category = cls == 0 ? kCategories[k % (spec.classes - 1)] : synthetic_category(cls);
      r.header = std::to_string(r.id) + " synthetic/" + (cls == 0 ? std::string("NV") : category) + "_" +
                 std::to_string(k) + ".c " + api + " " + std::to_string(body.size());
      r.body = std::move(body);
      r.label = static_cast<unsigned>(cls);
      r.origin = Origin::Synthetic;
      r.category = category;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace gadgetforge
