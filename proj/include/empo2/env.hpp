#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "empo2/common.hpp"

namespace empo2 {

// A task: environment family plus the variant that fixes the layout.
struct TaskSpec {
  std::string env_id;
  std::uint64_t variant = 0;
  Tokens description;

  bool operator==(const TaskSpec&) const = default;
};

struct Observation {
  Tokens tokens;
  int room_id = 0;
  std::uint32_t milestone_flags = 0;

  bool operator==(const Observation&) const = default;
};

struct ActionId {
  int value = 0;

  bool operator==(const ActionId&) const = default;
};

struct AdmissibleAction {
  ActionId id;
  Tokens tokens;
};

struct StepOutcome {
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  bool success = false;
};

// ---------------------------------------------------------------------------
// Environment definition files.
//
// Plain text, one directive per line, `#` starts a comment. Fields inside a
// directive are separated by `;`. See docs/formats.md for the grammar.

struct ObjectDef {
  Tokens name;
  bool takeable = false;
  bool focusable = false;  // listed among the focus actions
  bool target = false;     // the single correct focus object
  bool hidden = false;     // invisible until the look action is used in its room
  std::vector<int> rooms;  // placement candidates, chosen by variant % size
};

struct RecipeDef {
  Tokens name;
  std::vector<int> needs;  // object indices that must be held
  int at = -1;             // object that must be visible, or -1
  int makes = -1;          // object placed in the current room, or -1
};

enum class EventKind { kTake, kSee, kReveal, kMake, kFocus };

struct MilestoneDef {
  double reward = 0.0;
  Tokens name;
  EventKind event = EventKind::kSee;
  int ref = -1;  // object index, or recipe index for kMake
};

struct EnvSpec {
  int format_version = 1;
  std::string family;
  Tokens task;
  std::vector<std::string> rooms;
  std::uint64_t variants = 0;
  Tokens look_action;
  std::vector<ObjectDef> objects;
  std::vector<RecipeDef> recipes;
  std::vector<MilestoneDef> milestones;
  double fail_reward = -100.0;
  std::uint64_t checksum = 0;  // fnv1a64 of the file bytes

  int target_object() const;
  int focus_milestone() const;
};

EnvSpec parse_env_spec(std::string_view text);
EnvSpec load_env_spec(const std::filesystem::path& path);

// Families compiled into the library from data/envs/.
std::vector<std::string> builtin_families();
std::shared_ptr<const EnvSpec> builtin_env_spec(std::string_view family);
// Makes an additional spec resolvable by family name (e.g. one loaded from a
// file). Replaces a previous registration of the same family.
void register_env_spec(std::shared_ptr<const EnvSpec> spec);
std::shared_ptr<const EnvSpec> find_env_spec(std::string_view family);

// One episode's worth of mutable state over an immutable spec. Copyable, so
// search oracles can branch from any state.
class Environment {
 public:
  Environment(std::shared_ptr<const EnvSpec> spec, std::uint64_t variant);

  const TaskSpec& task() const { return task_; }
  const EnvSpec& spec() const { return *spec_; }

  Observation reset();
  Observation observation() const;
  std::vector<AdmissibleAction> admissible_actions() const;
  StepOutcome step(ActionId action);

  bool done() const { return done_; }
  bool success() const { return success_; }
  int steps_taken() const { return steps_; }
  double episode_return() const { return return_; }
  std::uint32_t milestone_flags() const { return milestones_; }
  // Names of milestones not yet achieved, in file order.
  std::vector<std::string> missing_milestones() const;
  // Room an object starts in for this variant, or -1 when it is not placed.
  int initial_room(int object) const;

 private:
  enum class ActionKind { kFocus, kTake, kRecipe, kLook, kForward, kBack };
  struct Action {
    ActionKind kind;
    int ref;
    Tokens tokens;
  };

  static constexpr int kHeld = -1;
  static constexpr int kGone = -2;

  std::vector<Action> enumerate_actions() const;
  bool visible(int object) const;
  double grant(EventKind event, int ref);

  std::shared_ptr<const EnvSpec> spec_;
  TaskSpec task_;
  std::vector<int> location_;        // per object: room, kHeld or kGone
  std::vector<bool> revealed_;       // per room
  std::vector<bool> recipe_done_;
  int room_ = 0;
  std::uint32_t milestones_ = 0;
  int steps_ = 0;
  double return_ = 0.0;
  bool done_ = false;
  bool success_ = false;
};

// Looks the family up among built-in and registered specs.
// Throws InvalidArgument for an unknown family or an out-of-range variant.
Environment make_env(const TaskSpec& spec);
TaskSpec make_task(std::string_view family, std::uint64_t variant);

}  // namespace empo2
