#include "micobot/task/scenario.hpp"

namespace micobot::task {

namespace {

// Layouts are coarse stand-ins for a living room with a kitchen, a shelf and
// a console table. The robot works from the TV side of the coffee table, the
// human sits on the couch side.

constexpr const char* kTask1 = R"(# Pour package into bowl
scenario task-1
description "Pour Package into Bowl"

[world]
size 16 12
meters_per_cell 0.5
seed 1
furniture kitchen_counter 1,1 2,1 3,1 4,1
furniture coffee_table 7,6 8,6
furniture couch 6,9 7,9 8,9 9,9
furniture tv_stand 7,3 8,3
agent robot 8,5
agent human 7,8

[objects]
bowl kitchen_counter
package kitchen_counter closed
scissors kitchen_counter

[plan]
pickplace(bowl, coffee_table)
pickplace(package, coffee_table)
pickplace(scissors, coffee_table)
pick_open_place(scissors, package, coffee_table)
pick_pour_place(package, bowl, coffee_table)

[hierarchy]
0..2 "Bring bowl and package to coffee table" "bring the bowl and the package to the coffee table"
2..4 "Open package" "open the package"
4..5 "Pour package into bowl" "pour the package into the bowl"

[capabilities]
0 0.95
1 0.95
2 0.95
3 0
4 0.95

[durations]
robot pickplace 12
robot pick_open_place 20
robot pick_pour_place 15
human pickplace 8
human pick_open_place 15
human pick_pour_place 10

[robot]
irrecoverable 0.1
skills pickplace pick_open_place pick_pour_place
)";

constexpr const char* kTask2 = R"(# Assemble toy car
scenario task-2
description "Assemble Toy Car"

[world]
size 16 12
meters_per_cell 0.5
seed 2
furniture shelf 12,1 13,1 14,1
furniture coffee_table 7,6 8,6
furniture couch 6,9 7,9 8,9 9,9
furniture tv_stand 7,3 8,3
agent robot 8,5
agent human 7,8

[objects]
parts_tray shelf
window parts_tray
seats parts_tray
wheels shelf
drill shelf
hex_drill_bit shelf
car coffee_table

[plan]
pickplace(parts_tray, coffee_table)
pickplace(wheels, coffee_table)
pickplace(drill, coffee_table)
put_on(wheels, car, drill)
pickplace(hex_drill_bit, coffee_table)
switch(hex_drill_bit, drill)
put_on(window, car, drill)
put_on(seats, car, drill)

[hierarchy]
0..2 "Bring parts to coffee table" "bring the parts to the coffee table"
2..4 "Assemble wheels" "assemble the wheels"
4..6 "Switch drill bit" "switch the drill bit"
6..8 "Assemble rest of car" "assemble the rest of the car"

[capabilities]
0 0.95
1 0.95
2 0.95
3 0
4 0.5
5 0
6 0
7 0

[durations]
robot pickplace 12
robot put_on 25
robot switch 15
human pickplace 8
human put_on 20
human switch 12

[robot]
irrecoverable 0.1
skills pickplace put_on switch
)";

constexpr const char* kTask3 = R"(# Pack gift box
scenario task-3
description "Pack Gift Box"

[world]
size 16 12
meters_per_cell 0.5
seed 3
furniture console_table 1,5 1,6
furniture coffee_table 7,6 8,6
furniture couch 6,9 7,9 8,9 9,9
furniture tv_stand 7,3 8,3
agent robot 8,5
agent human 7,8

[objects]
box coffee_table
box_flap box
box_lid coffee_table
gift_tissue_paper coffee_table
toy_car coffee_table
ribbons console_table
tape coffee_table
scissors coffee_table
gift_bow coffee_table

[plan]
fold(box_flap)
pickplace(gift_tissue_paper, box)
pickplace(toy_car, box)
cover(box_lid, box)
pickplace(ribbons, coffee_table)
wrap(ribbons, box)
cut_put(tape, scissors, box)
pickplace(gift_bow, box_lid)

[hierarchy]
0..1 "Assemble box" "assemble the box"
1..3 "Put in gift" "put the gift in the box"
3..6 "Seal the box" "seal the box"
6..8 "Decorate the box" "decorate the box"

[capabilities]
0 0.95
1 0.5
2 0.95
3 0
4 0.5
5 0
6 0
7 0.95

[durations]
robot pickplace 12
robot fold 10
robot cover 10
robot wrap 30
robot cut_put 25
human pickplace 8
human fold 5
human cover 6
human wrap 25
human cut_put 15

[robot]
irrecoverable 0.1
skills pickplace fold cover wrap cut_put
)";

}  // namespace

std::string builtin_document(const std::string& name) {
  if (name == "task-1") return kTask1;
  if (name == "task-2") return kTask2;
  if (name == "task-3") return kTask3;
  throw ConfigError("no builtin scenario named '" + name + "'");
}

const std::vector<TaskScenario>& builtin_scenarios() {
  static const std::vector<TaskScenario> kBuiltins = {
      load_scenario(kTask1),
      load_scenario(kTask2),
      load_scenario(kTask3),
  };
  return kBuiltins;
}

}  // namespace micobot::task
