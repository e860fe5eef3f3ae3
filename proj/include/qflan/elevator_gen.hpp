#pragma once

#include <string>

namespace qflan {

// Generates a SCAN-style elevator product line with the given number of
// floors. One cabin serves uniformly random calls; nine optional features
// (anti-prank, empty-return, executive floor, open-when-idle, overload
// protection, parking, quick close, shuttle, two-thirds-full) gate actions
// through action constraints, and a requires-chain keeps the default
// configuration (everything but Park) consistent. Boarding is gated by
// load < capacity, so the safety property "an overloaded cabin never moves"
// holds with probability one by construction. maxStep is only read by
// until-queries as the observation horizon.
inline std::string generate_elevator(int floors, long long max_step) {
  std::string top = std::to_string(floors - 1);
  std::string s;
  s += "// elevator with " + std::to_string(floors) + " floors, one cabin\n\n";
  s += "begin abstract features\n  Elevator\nend abstract features\n\n";
  s += "begin concrete features\n";
  s += "  AntiPrank , Empty , Executive , OpenWhenIdle , Overload ,\n";
  s += "  Park , QuickClose , Shuttle , TwoThirdsFull\n";
  s += "end concrete features\n\n";
  s += "begin variables\n";
  s += "  floor = 0\n  target = 0\n  direction = 0\n  load = 0\n";
  s += "  capacity = 8\n  maxload = 4\n";
  s += "  maxStep = " + std::to_string(max_step) + "\n";
  s += "end variables\n\n";
  s += "begin actions\n";
  s += "  press park empty exec shuttle prank openIdle enter exit close quickClose\n";
  s += "end actions\n\n";
  s += "begin feature diagram\n";
  s += "  Elevator -> { ?AntiPrank , ?Empty , ?Executive , ?OpenWhenIdle , ?Overload ,\n";
  s += "                ?Park , ?QuickClose , ?Shuttle , ?TwoThirdsFull }\n";
  s += "end feature diagram\n\n";
  s += "begin cross-tree constraints\n";
  s += "  Park requires AntiPrank\n";
  s += "  AntiPrank requires Empty\n";
  s += "  Empty requires Executive\n";
  s += "  Executive requires OpenWhenIdle\n";
  s += "  OpenWhenIdle requires Overload\n";
  s += "  Overload requires QuickClose\n";
  s += "  QuickClose requires Shuttle\n";
  s += "  Shuttle requires TwoThirdsFull\n";
  s += "end cross-tree constraints\n\n";
  s += "begin action constraints\n";
  s += "  do(park) -> has(Park)\n";
  s += "  do(empty) -> has(Empty) & load == 0\n";
  s += "  do(exec) -> has(Executive)\n";
  s += "  do(shuttle) -> has(Shuttle)\n";
  s += "  do(prank) -> !has(AntiPrank)\n";
  s += "  do(openIdle) -> has(OpenWhenIdle)\n";
  s += "  do(enter) -> load < capacity & (!has(TwoThirdsFull) | 3 * load < 2 * capacity)\n";
  s += "  do(exit) -> load > 0\n";
  s += "  do(close) -> !has(Overload) | load <= maxload\n";
  s += "  do(quickClose) -> has(QuickClose) & (!has(Overload) | load <= maxload)\n";
  s += "end action constraints\n\n";
  s += "begin processes diagram\n";
  s += "  begin process lift\n";
  s += "    states = idle , moving , open\n";
  s += "    transitions =\n";
  for (int f = 0; f < floors; ++f)
    s += "      idle -(press , 1 , { target = " + std::to_string(f) +
         " })-> moving ,\n";
  s += "      idle -(park , 1 , { target = 0 })-> moving ,\n";
  s += "      idle -(empty , 1 , { target = 0 })-> moving ,\n";
  s += "      idle -(exec , 1 , { target = " + top + " })-> moving ,\n";
  s += "      idle -(shuttle , 1 , { target = " + top + " })-> moving ,\n";
  s += "      idle -(prank , 1 , { target = " + top + " })-> moving ,\n";
  s += "      idle -(openIdle , 2)-> open ,\n";
  s += "      moving -(ask({ floor < target }) , 10 , { floor = floor + 1 , direction = 1 })-> moving ,\n";
  s += "      moving -(ask({ floor > target }) , 10 , { floor = floor - 1 , direction = -1 })-> moving ,\n";
  s += "      moving -(ask({ floor == target }) , 10 , { direction = 0 })-> open ,\n";
  s += "      open -(enter , 4 , { load = load + 1 })-> open ,\n";
  s += "      open -(exit , 4 , { load = load - 1 })-> open ,\n";
  s += "      open -(close , 5)-> idle ,\n";
  s += "      open -(quickClose , 6)-> idle\n";
  s += "  end process\n";
  s += "end processes diagram\n\n";
  s += "begin init\n";
  s += "  installedFeatures = { AntiPrank , Empty , Executive , OpenWhenIdle ,\n";
  s += "                        Overload , QuickClose , Shuttle , TwoThirdsFull }\n";
  s += "  initialProcesses = lift\n";
  s += "end init\n";
  return s;
}

// The matching until-query: the cabin must never move while overloaded, for
// the first maxStep steps.
inline std::string elevator_until_analysis() {
  std::string s;
  s += "begin analysis\n";
  s += "  query = eval until { steps < maxStep } : { load > capacity -> direction == 0 }\n";
  s += "  default delta = 0.1\n";
  s += "  alpha = 0.05\n";
  s += "end analysis\n";
  return s;
}

}  // namespace qflan
