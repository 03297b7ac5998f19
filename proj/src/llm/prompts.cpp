#include "micobot/llm/adapter.hpp"

namespace micobot::llm {

namespace {

constexpr const char* kClassify = R"(You label one utterance from a human working with a household robot.
Reply with a single JSON object and nothing else:
{"act": ACT, "step_refs": ["B-E", ...], "robot_part": "B-E" | null, "human_part": "B-E" | null, "sentiment": "positive" | "neutral" | "negative"}
ACT is one of ask_help, accept, reject, conditional_accept, propose_split, claim_step, delegate_step, inform_limitation, acknowledge, smalltalk, silence.
Ranges are half-open low-level step indices ("2-4" covers steps 2 and 3). Use the plan in the context to resolve step names.
If a robot request is pending, a yes-like reply is accept and a no-like reply is reject.

Example: pending ask_help 3-4, utterance "Sure thing, give me a second." -> {"act":"accept","step_refs":["3-4"],"robot_part":null,"human_part":null,"sentiment":"positive"}
Example: pending ask_help 2-4, utterance "If you grab the scissors I can do the rest." -> {"act":"conditional_accept","step_refs":["2-3","3-4"],"robot_part":"2-3","human_part":"3-4","sentiment":"neutral"}
Example: no pending request, utterance "I'll take care of pouring." -> {"act":"claim_step","step_refs":["4-5"],"robot_part":null,"human_part":null,"sentiment":"neutral"}
Example: no pending request, utterance "You do the bowl." -> {"act":"delegate_step","step_refs":["0-1"],"robot_part":null,"human_part":null,"sentiment":"neutral"}
Example: no pending request, utterance "Nice work so far!" -> {"act":"smalltalk","step_refs":[],"robot_part":null,"human_part":null,"sentiment":"positive"}
)";

constexpr const char* kSentiment = R"(Rate how the human feels about helping the robot, from the latest message and the recent dialog.
Reply with a single JSON object {"score": S} where S is a number in [-1, 1]; -1 is hostile, 0 neutral, 1 warm.

Example: "Thanks, that was quick!" -> {"score": 0.7}
Example: "Whatever." -> {"score": -0.3}
Example: "Stop asking me for things." -> {"score": -0.9}
Example: "Ok." -> {"score": 0.0}
)";

constexpr const char* kRealize = R"(Rewrite the robot's draft utterance so it sounds natural and friendly.
Keep the same intent (request, proposal, apology, thanks) and mention the same task steps. One or two sentences. Reply with the sentence only.

Example draft: "Could you please help me open the package? Thank you so much!" -> Could you please help me open the package? I can't manage it myself. Thank you so much!
Example draft: "I'm sorry, but I'm not able to open the package." -> I'm sorry, but I'm not able to open the package with my gripper.
Example draft: "Let's collaborate to open the package! I can bring the scissors to the coffee table, and you can then open the package using the scissors. Thank you for your help!" -> Let's collaborate to open the package! I can bring the scissors to the coffee table, and you can then open the package using the scissors. Thanks a lot!
Example draft: "Great! Thank you for taking care of \"Open package\"!" -> Great! Thank you for taking care of "Open package", that really helps!
Example draft: "You should assemble the wheels." -> You should assemble the wheels, you are faster at it.
Example draft: "I will bring the bowl to the coffee table." -> I will bring the bowl to the coffee table right away.
Example draft: "Ok, I will do that now!" -> Ok, I will do that now!
Example draft: "Sorry, I can't do that right now." -> Sorry, I can't do that right now.
Example draft: "Ok, if you bring the scissors to the coffee table, then I will open the package using the scissors." -> Ok, if you bring the scissors to the coffee table, then I will open the package using the scissors.
Example draft: "Could you please help me switch the drill bit? Thank you so much!" -> Could you please help me switch the drill bit? Thank you so much!
)";

constexpr const char* kStrategy = R"(You decide how a household robot reacts to the latest human dialog.
Reply with one strategy program on a single line, clauses separated by "; ":
  policy proceed | policy wait | policy negotiate_first ACT [+ ACT]
  add CONSTRAINT | remove CONSTRAINT
CONSTRAINT is "assign B-E H|R", "forbid B-E H|R" or "split B-E K" (robot does B..K-1, human does K..E-1).
ACT is "ask_help B-E", "inform_limitation B-E" or "propose_split B-E B-K K-E".
Ranges are half-open step indices. Exactly one policy clause. Never reference steps outside the plan.

Example: human claims 4-5 -> policy proceed; add assign 4-5 H
Example: human delegates 0-2 -> policy proceed; add assign 0-2 R
Example: human asks the robot for help with 1-2 -> policy proceed; add assign 1-2 R
Example: human rejects pending ask_help 2-4, robot can do step 2 but not step 3 -> policy negotiate_first propose_split 2-4 2-3 3-4
Example: human rejects pending ask_help 3-4, robot cannot do step 3 -> policy negotiate_first inform_limitation 3-4 + ask_help 3-4
Example: human rejects pending ask_help 0-2, robot can do both steps -> policy negotiate_first ask_help 0-2
Example: human rejects a repeated request for 0-2 after negotiation -> policy proceed; add forbid 0-2 H
Example: human rejects pending ask_help 5-6 which they had claimed earlier (assign 5-6 H active) -> policy negotiate_first inform_limitation 5-6 + ask_help 5-6; remove assign 5-6 H
Example: human accepts pending propose_split 2-4 2-3 3-4 -> policy proceed; add split 2-4 3
Example: human conditionally accepts: robot does 2-3, human does 3-4 -> policy proceed; add split 2-4 3
Example: human accepts pending ask_help 3-4 -> policy proceed
Example: human says thanks -> policy proceed
Example: human is silent -> policy proceed
Example: human says they cannot do 6-8 -> policy proceed; add forbid 6-8 H
Example: human says "give me a moment" with no request pending -> policy wait
)";

constexpr const char* kAllocate = R"(You allocate the remaining steps of a household task between a robot (R) and a human (H).
You know the symbolic state, the dialog so far, the task plan and alpha, the factor by which human effort is more costly than robot effort.
Reply with one string of H/R letters, one letter per remaining step in order, and nothing else.

Example: 5 remaining steps, robot can do all of them -> RRRRR
Example: 3 remaining steps, human asked to do the last one -> RRH
)";

}  // namespace

const std::string& preamble(Capability c) {
  static const std::string kTexts[] = {kClassify, kSentiment, kRealize, kStrategy, kAllocate};
  return kTexts[static_cast<int>(c)];
}

}  // namespace micobot::llm
