#!/usr/bin/env python3
"""Regenerates the toy fixtures in this directory.

Outputs: labels.txt, eval.jsonl, test.jsonl, script.jsonl (scripted agents for
`apolo optimize`), env.json and sim_script.jsonl (for `apolo simulate`).
"""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
LABELS = ["sadness", "anger", "fear", "joy", "loneliness", "worthlessness"]

EVAL = [
    ("e01", "Nobody called", "Another weekend alone in the flat. I talk to the walls.", ["loneliness", "sadness"]),
    ("e02", "Passed!", "I finally passed the exam I failed twice.", ["joy"]),
    ("e03", "Landlord", "He kept the whole deposit for a scratch that was already there.", ["anger"]),
    ("e04", "Night shift", "Every creak in the car park makes my heart race.", ["fear"]),
    ("e05", "Useless", "I mess up everything I touch, nobody needs me.", ["worthlessness", "sadness"]),
    ("e06", "Moved cities", "New job, no friends yet, dinners for one.", ["loneliness"]),
    ("e07", "Test results", "Waiting for the biopsy call and I cannot sleep.", ["fear"]),
    ("e08", "Grandma", "We buried her today. The house feels empty.", ["sadness"]),
    ("e09", "Promotion", "They picked me! I keep grinning at my desk.", ["joy"]),
    ("e10", "Group project", "They took credit for my work in front of the boss.", ["anger"]),
]
TEST = [
    ("t01", "Holiday", "Beach house booked, the kids are thrilled.", ["joy"]),
    ("t02", "Silence", "My messages go unanswered for weeks.", ["loneliness", "sadness"]),
    ("t03", "Stalker", "Same car outside my building again tonight.", ["fear"]),
    ("t04", "Rent hike", "Forty percent more with two weeks notice.", ["anger"]),
]

# Target answers per iteration: index into EVAL -> predicted labels. Later
# iterations get more right.
WRONG = {
    1: {0: ["sadness"], 4: ["sadness"], 5: ["sadness"], 6: ["anger"]},
    2: {0: ["sadness"], 4: ["worthlessness"]},
    3: {},
}


def emotions(labels):
    return "**Emotions**: [" + ", ".join(labels) + "]\n**Reasoning**: grounded in the post."


def entry(role, it, step, kind, occ, response, pt=40, ct=12):
    return {"role": role, "iteration": it, "step": step, "call_kind": kind,
            "occurrence": occ, "response": response,
            "prompt_tokens": pt, "completion_tokens": ct}


def write_jsonl(name, rows):
    with open(HERE / name, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def samples(rows):
    return [{"id": i, "title": t, "text": x, "labels": l} for i, t, x, l in rows]


def optimize_script():
    rows = []
    plans = {
        1: ("Total steps: 2\nStep 1: Review the emotional indicators in the post.\n"
            "Step 2: Select every matching label from the options."),
        2: ("Total steps: 3\nStep 1: Summarize the post.\nStep 2: Guess a label.\n"
            "Step 3: Stop after the first label."),
    }
    for k, plan in plans.items():
        rows.append(entry("planner", 1, 0, "plan", k, plan))
    risks = {1: ["0.1", "0.1"], 2: ["0.3", "0.4", "0.6"]}
    for k, rs in risks.items():
        for i, r in enumerate(rs, start=1):
            rows.append(entry("critic", 1, i, "risk", k, f"emotional_risk: {r}\nsafety_risk: {r}"))
    rows.append(entry("critic", 1, 0, "plausibility", 1, "0.9"))
    rows.append(entry("critic", 1, 0, "plausibility", 2, "0.6"))

    prompt = "Identify the emotions expressed in the post."
    for t in (1, 2, 3):
        for i in (1, 2):
            rows.append(entry("teacher", t, i, "question", 1,
                              f"Which cues in the post signal each emotion (iteration {t}, step {i})? "
                              "Could more than one label apply?"))
            if t == 1 and i == 1:
                rows.append(entry("critic", t, i, "verdict", 1,
                                  "[False]\n[suggestion: ask about co-occurring emotions explicitly]"))
                rows.append(entry("teacher", t, i, "revise", 1,
                                  "Which emotions co-occur in the post, and which words show each one?"))
                rows.append(entry("critic", t, i, "verdict", 2, "[True]"))
            else:
                rows.append(entry("critic", t, i, "verdict", 1, "[True]"))
            prompt = prompt + f" Pass {t}.{i}: list every emotion that has textual evidence."
            rows.append(entry("student", t, i, "refine", 1, prompt))
            rows.append(entry("critic", t, i, "alignment", 1, "0.8"))
        for j, (_, _, _, gold) in enumerate(EVAL):
            pred = WRONG[t].get(j, gold)
            rows.append(entry("target", t, 0, "predict", j + 1, emotions(pred), pt=120, ct=20))
    for j, (_, _, _, gold) in enumerate(TEST):
        rows.append(entry("target", 0, 0, "predict_test", j + 1, emotions(gold), pt=120, ct=20))
    return rows


ENV = {"base_score": 0.2,
       "feature_weights": {"step by step": 0.1, "options": 0.1, "evidence": 0.1,
                           "context": 0.1, "co-occurring": 0.1}}


def simulate_script():
    # Trivial-planner run (--ablate no-planner): one step per iteration; the
    # Student adds one environment keyword per iteration, then stops adding.
    rows = []
    keywords = list(ENV["feature_weights"])
    prompt = "Classify the emotion expressed in the text."
    for t in range(1, 11):
        rows.append(entry("teacher", t, 1, "question", 1, "What would make the instruction more precise?"))
        rows.append(entry("critic", t, 1, "verdict", 1, "[True]"))
        if t <= len(keywords):
            prompt = prompt + f" Use {keywords[t - 1]}."
        rows.append(entry("student", t, 1, "refine", 1, prompt))
        rows.append(entry("critic", t, 1, "alignment", 1, "0.9"))
    return rows


def main():
    (HERE / "labels.txt").write_text("mode: multi\n" + "\n".join(LABELS) + "\n", encoding="utf-8")
    write_jsonl("eval.jsonl", samples(EVAL))
    write_jsonl("test.jsonl", samples(TEST))
    write_jsonl("script.jsonl", optimize_script())
    (HERE / "env.json").write_text(json.dumps(ENV, indent=2) + "\n", encoding="utf-8")
    write_jsonl("sim_script.jsonl", simulate_script())


if __name__ == "__main__":
    main()
