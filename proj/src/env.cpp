#include "empo2/env.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "empo2/hashing.hpp"

namespace empo2 {

// Generated at configure time from data/envs/*.env.
namespace builtin {
struct SpecText {
  const char* family;
  const char* text;
};
extern const SpecText kSpecs[];
extern const std::size_t kSpecCount;
}  // namespace builtin

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(';', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw FormatError("env spec line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) fail(line, "expected a number, got '" + s + "'");
  return v;
}

int find_object(const EnvSpec& spec, const Tokens& name) {
  for (std::size_t i = 0; i < spec.objects.size(); ++i)
    if (spec.objects[i].name == name) return static_cast<int>(i);
  return -1;
}

// Splits a token run into consecutive object names, longest match first.
std::vector<int> match_objects(const EnvSpec& spec, const Tokens& toks, int line) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    int best = -1;
    std::size_t best_len = 0;
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      const Tokens& name = spec.objects[o].name;
      if (name.size() <= best_len || i + name.size() > toks.size()) continue;
      if (std::equal(name.begin(), name.end(), toks.begin() + static_cast<long>(i))) {
        best = static_cast<int>(o);
        best_len = name.size();
      }
    }
    if (best < 0) fail(line, "unknown object starting at '" + toks[i] + "'");
    out.push_back(best);
    i += best_len;
  }
  return out;
}

int single_object(const EnvSpec& spec, const Tokens& toks, int line) {
  int o = find_object(spec, toks);
  if (o < 0) fail(line, "unknown object '" + join(toks) + "'");
  return o;
}

void validate(const EnvSpec& spec) {
  if (spec.family.empty()) throw FormatError("env spec: missing family");
  if (spec.rooms.empty()) throw FormatError("env spec: no rooms");
  if (spec.variants == 0) throw FormatError("env spec: variants must be positive");
  if (spec.look_action.empty()) throw FormatError("env spec: missing look action");
  if (spec.milestones.empty() || spec.milestones.size() > 32)
    throw FormatError("env spec: need 1..32 milestones");
  int targets = 0;
  for (const auto& o : spec.objects) {
    targets += o.target ? 1 : 0;
    for (int r : o.rooms)
      if (r < 0 || r >= static_cast<int>(spec.rooms.size()))
        throw FormatError("env spec: object '" + join(o.name) + "' has room out of range");
  }
  if (targets != 1) throw FormatError("env spec: exactly one target object required");
  double total = 0.0;
  int focus = 0;
  for (const auto& m : spec.milestones) {
    if (m.reward < 0.0) throw FormatError("env spec: milestone rewards must be non-negative");
    total += m.reward;
    if (m.event == EventKind::kFocus) {
      ++focus;
      if (!spec.objects[static_cast<std::size_t>(m.ref)].target)
        throw FormatError("env spec: focus milestone must name the target");
    }
  }
  if (focus != 1) throw FormatError("env spec: exactly one focus milestone required");
  if (std::abs(total - 100.0) > 1e-9) throw FormatError("env spec: milestone rewards must sum to 100");
  if (spec.fail_reward < -100.0 || spec.fail_reward > 0.0)
    throw FormatError("env spec: fail reward must lie in [-100, 0]");
}

}  // namespace

int EnvSpec::target_object() const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].target) return static_cast<int>(i);
  return -1;
}

int EnvSpec::focus_milestone() const {
  for (std::size_t i = 0; i < milestones.size(); ++i)
    if (milestones[i].event == EventKind::kFocus) return static_cast<int>(i);
  return -1;
}

EnvSpec parse_env_spec(std::string_view text) {
  EnvSpec spec;
  spec.checksum = fnv1a64(text);
  bool header = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::size_t sp = line.find_first_of(" \t");
    std::string key = line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : trim(line.substr(sp));
    if (!header) {
      if (key != "empo2-env") fail(line_no, "file must start with 'empo2-env <version>'");
      spec.format_version = static_cast<int>(parse_number(rest, line_no));
      if (spec.format_version != 1) fail(line_no, "unsupported format version " + rest);
      header = true;
      continue;
    }
    if (key == "family") {
      spec.family = rest;
    } else if (key == "task") {
      spec.task = split_ws(rest);
    } else if (key == "rooms") {
      spec.rooms = split_ws(rest);
    } else if (key == "variants") {
      double v = parse_number(rest, line_no);
      if (v < 1 || v != std::floor(v)) fail(line_no, "variants must be a positive integer");
      spec.variants = static_cast<std::uint64_t>(v);
    } else if (key == "look") {
      spec.look_action = split_ws(rest);
    } else if (key == "fail") {
      spec.fail_reward = parse_number(rest, line_no);
    } else if (key == "object") {
      auto f = split_fields(rest);
      if (f.size() != 3) fail(line_no, "object needs 3 fields");
      ObjectDef o;
      o.name = split_ws(f[0]);
      if (o.name.empty()) fail(line_no, "object name is empty");
      if (find_object(spec, o.name) >= 0) fail(line_no, "duplicate object");
      for (const auto& flag : split_ws(f[1])) {
        if (flag == "take") o.takeable = true;
        else if (flag == "focus") o.focusable = true;
        else if (flag == "target") o.target = o.focusable = true;
        else if (flag == "hidden") o.hidden = true;
        else if (flag != "none") fail(line_no, "unknown object flag '" + flag + "'");
      }
      Tokens rooms = split_ws(f[2]);
      if (rooms.empty() || rooms[0] != "rooms") fail(line_no, "third field must start with 'rooms'");
      for (std::size_t i = 1; i < rooms.size(); ++i)
        o.rooms.push_back(static_cast<int>(parse_number(rooms[i], line_no)));
      spec.objects.push_back(std::move(o));
    } else if (key == "recipe") {
      auto f = split_fields(rest);
      RecipeDef r;
      r.name = split_ws(f[0]);
      for (std::size_t i = 1; i < f.size(); ++i) {
        Tokens t = split_ws(f[i]);
        if (t.empty()) fail(line_no, "empty recipe field");
        Tokens args(t.begin() + 1, t.end());
        if (t[0] == "needs") r.needs = match_objects(spec, args, line_no);
        else if (t[0] == "at") r.at = single_object(spec, args, line_no);
        else if (t[0] == "makes") r.makes = single_object(spec, args, line_no);
        else fail(line_no, "unknown recipe field '" + t[0] + "'");
      }
      if (r.name.empty()) fail(line_no, "recipe name is empty");
      spec.recipes.push_back(std::move(r));
    } else if (key == "milestone") {
      auto f = split_fields(rest);
      if (f.size() != 3) fail(line_no, "milestone needs 3 fields");
      MilestoneDef m;
      m.reward = parse_number(f[0], line_no);
      m.name = split_ws(f[1]);
      Tokens ev = split_ws(f[2]);
      if (ev.size() < 2) fail(line_no, "milestone event needs a kind and a reference");
      Tokens ref(ev.begin() + 1, ev.end());
      if (ev[0] == "make") {
        m.event = EventKind::kMake;
        m.ref = -1;
        for (std::size_t i = 0; i < spec.recipes.size(); ++i)
          if (spec.recipes[i].name == ref) m.ref = static_cast<int>(i);
        if (m.ref < 0) fail(line_no, "unknown recipe '" + join(ref) + "'");
      } else {
        if (ev[0] == "take") m.event = EventKind::kTake;
        else if (ev[0] == "see") m.event = EventKind::kSee;
        else if (ev[0] == "reveal") m.event = EventKind::kReveal;
        else if (ev[0] == "focus") m.event = EventKind::kFocus;
        else fail(line_no, "unknown milestone event '" + ev[0] + "'");
        m.ref = single_object(spec, ref, line_no);
      }
      spec.milestones.push_back(std::move(m));
    } else {
      fail(line_no, "unknown directive '" + key + "'");
    }
  }
  if (!header) throw FormatError("env spec: empty file");
  validate(spec);
  return spec;
}

EnvSpec load_env_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open env spec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_env_spec(ss.str());
}

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<const EnvSpec>, std::less<>> specs;

  Registry() {
    for (std::size_t i = 0; i < builtin::kSpecCount; ++i) {
      auto spec = std::make_shared<const EnvSpec>(parse_env_spec(builtin::kSpecs[i].text));
      specs[spec->family] = spec;
    }
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::vector<std::string> builtin_families() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < builtin::kSpecCount; ++i) out.emplace_back(builtin::kSpecs[i].family);
  return out;
}

std::shared_ptr<const EnvSpec> builtin_env_spec(std::string_view family) {
  for (std::size_t i = 0; i < builtin::kSpecCount; ++i)
    if (family == builtin::kSpecs[i].family)
      return std::make_shared<const EnvSpec>(parse_env_spec(builtin::kSpecs[i].text));
  throw InvalidArgument("unknown env_id '" + std::string(family) + "'");
}

void register_env_spec(std::shared_ptr<const EnvSpec> spec) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.specs[spec->family] = std::move(spec);
}

std::shared_ptr<const EnvSpec> find_env_spec(std::string_view family) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.specs.find(family);
  if (it == r.specs.end()) throw InvalidArgument("unknown env_id '" + std::string(family) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

Environment::Environment(std::shared_ptr<const EnvSpec> spec, std::uint64_t variant)
    : spec_(std::move(spec)) {
  if (variant >= spec_->variants)
    throw InvalidArgument("variant " + std::to_string(variant) + " out of range for '" +
                          spec_->family + "' (0.." + std::to_string(spec_->variants - 1) + ")");
  task_ = TaskSpec{spec_->family, variant, spec_->task};
  reset();
}

int Environment::initial_room(int object) const {
  const auto& rooms = spec_->objects.at(static_cast<std::size_t>(object)).rooms;
  if (rooms.empty()) return kGone;
  return rooms[task_.variant % rooms.size()];
}

Observation Environment::reset() {
  const std::size_t n = spec_->objects.size();
  location_.assign(n, kGone);
  for (std::size_t i = 0; i < n; ++i) location_[i] = initial_room(static_cast<int>(i));
  revealed_.assign(spec_->rooms.size(), false);
  recipe_done_.assign(spec_->recipes.size(), false);
  room_ = 0;
  milestones_ = 0;
  steps_ = 0;
  return_ = 0.0;
  done_ = false;
  success_ = false;
  return observation();
}

bool Environment::visible(int object) const {
  const auto& o = spec_->objects[static_cast<std::size_t>(object)];
  return location_[static_cast<std::size_t>(object)] == room_ &&
         (!o.hidden || revealed_[static_cast<std::size_t>(room_)]);
}

Observation Environment::observation() const {
  Observation obs;
  obs.room_id = room_;
  obs.milestone_flags = milestones_;
  obs.tokens.push_back(spec_->rooms[static_cast<std::size_t>(room_)]);
  for (std::size_t i = 0; i < spec_->objects.size(); ++i)
    if (visible(static_cast<int>(i)))
      for (const auto& t : spec_->objects[i].name) obs.tokens.push_back(t);
  for (std::size_t i = 0; i < spec_->objects.size(); ++i)
    if (location_[i] == kHeld)
      for (const auto& t : spec_->objects[i].name) obs.tokens.push_back("inv_" + t);
  return obs;
}

std::vector<Environment::Action> Environment::enumerate_actions() const {
  std::vector<Action> out;
  const auto& objs = spec_->objects;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].focusable) continue;
    Tokens t{"focus"};
    t.insert(t.end(), objs[i].name.begin(), objs[i].name.end());
    out.push_back({ActionKind::kFocus, static_cast<int>(i), std::move(t)});
  }
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].takeable || !visible(static_cast<int>(i))) continue;
    Tokens t{"take"};
    t.insert(t.end(), objs[i].name.begin(), objs[i].name.end());
    out.push_back({ActionKind::kTake, static_cast<int>(i), std::move(t)});
  }
  for (std::size_t r = 0; r < spec_->recipes.size(); ++r) {
    const auto& rec = spec_->recipes[r];
    if (recipe_done_[r]) continue;
    bool ok = rec.at < 0 || visible(rec.at);
    for (int need : rec.needs) ok = ok && location_[static_cast<std::size_t>(need)] == kHeld;
    if (ok) out.push_back({ActionKind::kRecipe, static_cast<int>(r), rec.name});
  }
  out.push_back({ActionKind::kLook, -1, spec_->look_action});
  out.push_back({ActionKind::kForward, -1, {"move", "forward"}});
  out.push_back({ActionKind::kBack, -1, {"move", "back"}});
  return out;
}

std::vector<AdmissibleAction> Environment::admissible_actions() const {
  if (done_) throw InvalidArgument("admissible_actions: episode already done");
  auto actions = enumerate_actions();
  std::vector<AdmissibleAction> out;
  out.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i)
    out.push_back({ActionId{static_cast<int>(i)}, std::move(actions[i].tokens)});
  return out;
}

std::vector<std::string> Environment::missing_milestones() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < spec_->milestones.size(); ++i)
    if (!(milestones_ & (1u << i))) out.push_back(join(spec_->milestones[i].name));
  return out;
}

double Environment::grant(EventKind event, int ref) {
  double r = 0.0;
  for (std::size_t i = 0; i < spec_->milestones.size(); ++i) {
    const auto& m = spec_->milestones[i];
    if (m.event != event || m.ref != ref || (milestones_ & (1u << i))) continue;
    milestones_ |= 1u << i;
    r += m.reward;
  }
  return r;
}

StepOutcome Environment::step(ActionId action) {
  if (done_) throw InvalidArgument("step: episode already done");
  auto actions = enumerate_actions();
  if (action.value < 0 || action.value >= static_cast<int>(actions.size()))
    throw InvalidArgument("step: inadmissible action id " + std::to_string(action.value));
  const Action& a = actions[static_cast<std::size_t>(action.value)];
  ++steps_;
  double reward = 0.0;
  switch (a.kind) {
    case ActionKind::kFocus: {
      const int fm = spec_->focus_milestone();
      const std::uint32_t others = ((spec_->milestones.size() >= 32)
                                        ? 0xffffffffu
                                        : ((1u << spec_->milestones.size()) - 1u)) &
                                   ~(1u << fm);
      const bool ready = (milestones_ & others) == others;
      if (spec_->objects[static_cast<std::size_t>(a.ref)].target && ready && visible(a.ref)) {
        reward = grant(EventKind::kFocus, a.ref);
        success_ = true;
      } else {
        reward = spec_->fail_reward;
      }
      done_ = true;
      break;
    }
    case ActionKind::kTake:
      location_[static_cast<std::size_t>(a.ref)] = kHeld;
      reward += grant(EventKind::kTake, a.ref);
      break;
    case ActionKind::kRecipe: {
      const auto& rec = spec_->recipes[static_cast<std::size_t>(a.ref)];
      for (int need : rec.needs) location_[static_cast<std::size_t>(need)] = kGone;
      if (rec.makes >= 0) location_[static_cast<std::size_t>(rec.makes)] = room_;
      recipe_done_[static_cast<std::size_t>(a.ref)] = true;
      reward += grant(EventKind::kMake, a.ref);
      break;
    }
    case ActionKind::kLook:
      if (!revealed_[static_cast<std::size_t>(room_)]) {
        revealed_[static_cast<std::size_t>(room_)] = true;
        for (std::size_t i = 0; i < spec_->objects.size(); ++i)
          if (spec_->objects[i].hidden && location_[i] == room_)
            reward += grant(EventKind::kReveal, static_cast<int>(i));
      }
      break;
    case ActionKind::kForward:
      if (room_ + 1 < static_cast<int>(spec_->rooms.size())) ++room_;
      break;
    case ActionKind::kBack:
      if (room_ > 0) --room_;
      break;
  }
  if (!done_)
    for (std::size_t i = 0; i < spec_->objects.size(); ++i)
      if (visible(static_cast<int>(i))) reward += grant(EventKind::kSee, static_cast<int>(i));
  return_ += reward;
  return StepOutcome{reward, observation(), done_, success_};
}

Environment make_env(const TaskSpec& spec) {
  return Environment(find_env_spec(spec.env_id), spec.variant);
}

TaskSpec make_task(std::string_view family, std::uint64_t variant) {
  auto spec = find_env_spec(family);
  if (variant >= spec->variants)
    throw InvalidArgument("variant " + std::to_string(variant) + " out of range for '" +
                          spec->family + "'");
  return TaskSpec{spec->family, variant, spec->task};
}

}  // namespace empo2
