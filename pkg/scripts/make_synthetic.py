"""Write the hand-authored SYNTHETIC demo set to data/synthetic/.

Three small files, one per task family, in the canonical JSONL format. They
stand in for the licensed benchmarks in demos and in the live-run grid.
Scores on them say nothing about any published number.

    python scripts/make_synthetic.py
"""

from __future__ import annotations

from pathlib import Path

from iecache.datasets import CALENDAR_QUERY, GoldTable, TaskInstance, write_dataset
from iecache.schema import schema_from_json

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic"


# --------------------------------------------------------------------------
# qa: short reports with a question that needs a lookup or a small deduction

QA = [
    dict(q="Which warehouse shipped the most pallets in March?",
         t=("Monthly logistics memo. In March the Leeds warehouse shipped 410 pallets, up from 380 in February. "
            "Bristol shipped 455 pallets in March after a slow start. Glasgow handled 290 pallets in March but "
            "led all sites in February with 470. Cardiff was closed for refurbishment for most of March and "
            "shipped 35 pallets."),
         a=["Bristol"],
         schema=[{"name": "warehouse", "kind": "text"}, {"name": "month", "kind": "text"},
                 {"name": "pallets", "kind": "number"}],
         table={"slots": ["warehouse", "month", "pallets"],
                "rows": [["Leeds", "March", 410], ["Leeds", "February", 380], ["Bristol", "March", 455],
                         ["Glasgow", "March", 290], ["Glasgow", "February", 470], ["Cardiff", "March", 35]]}),
    dict(q="How many engineers joined the platform team in total?",
         t=("Hiring update. The platform team welcomed Priya in January and two more engineers, Tomas and Wen, "
            "in April. The data team hired three analysts over the same period. In June the platform team added "
            "one more engineer, Ada, while a contractor left the data team."),
         a=["4", "four"],
         schema=[{"name": "person", "kind": "text"}, {"name": "team", "kind": "text"},
                 {"name": "month", "kind": "text"}],
         table={"slots": ["person", "team", "month"],
                "rows": [["Priya", "platform", "January"], ["Tomas", "platform", "April"],
                         ["Wen", "platform", "April"], ["Ada", "platform", "June"]]}),
    dict(q="Who owns the invoice that is overdue?",
         t=("Accounts receivable notes. Invoice 1021 for Harbor Foods was paid on 3 May. Invoice 1022 belongs "
            "to Nimbus Labs and was due on 10 May; no payment has arrived. Invoice 1023 for Orchard Ltd is due "
            "next month."),
         a=["Nimbus Labs"],
         schema=[{"name": "invoice", "kind": "text"}, {"name": "client", "kind": "text"},
                 {"name": "status", "kind": "text"}],
         table={"slots": ["invoice", "client", "status"],
                "rows": [["1021", "Harbor Foods", "paid"], ["1022", "Nimbus Labs", "overdue"],
                         ["1023", "Orchard Ltd", "not yet due"]]}),
    dict(q="Which city hosted the conference the year after Lisbon?",
         t=("The society's annual conference moves every year. It was held in Lisbon in 2019 and went online "
            "in 2020 and 2021. Vienna hosted it in 2022, Lisbon again in 2023 and Montreal in 2024."),
         a=["Montreal"],
         schema=[{"name": "year", "kind": "number"}, {"name": "city", "kind": "text"}],
         table={"slots": ["year", "city"],
                "rows": [[2019, "Lisbon"], [2020, "online"], [2021, "online"], [2022, "Vienna"],
                         [2023, "Lisbon"], [2024, "Montreal"]]}),
    dict(q="Is the east pump running?",
         t=("Plant status at 06:00. The west pump tripped overnight and is offline pending inspection. The east "
            "pump was restarted at 04:30 after a filter change and has run normally since. The standby pump "
            "remains isolated."),
         a=["yes"],
         schema=[{"name": "pump", "kind": "text"}, {"name": "running", "kind": "boolean"}],
         table={"slots": ["pump", "running"],
                "rows": [["west", False], ["east", True], ["standby", False]]}),
    dict(q="What is the combined budget of the two smallest projects?",
         t=("Portfolio summary. Project Atlas has a budget of 120 thousand. Project Birch is the largest at 900 "
            "thousand. Project Cedar was scoped at 75 thousand and Project Dune at 210 thousand."),
         a=["195 thousand", "195"],
         schema=[{"name": "project", "kind": "text"}, {"name": "budget_thousands", "kind": "number"}],
         table={"slots": ["project", "budget_thousands"],
                "rows": [["Atlas", 120], ["Birch", 900], ["Cedar", 75], ["Dune", 210]]}),
    dict(q="Which runner finished second?",
         t=("Race report. Mara crossed the line first in 31:02. Jonas was just four seconds behind her. Leila "
            "finished third in 31:40 and Ben, who led for the first half, faded to fourth."),
         a=["Jonas"],
         schema=[{"name": "runner", "kind": "text"}, {"name": "position", "kind": "number"},
                 {"name": "finish_time", "kind": "text"}],
         table={"slots": ["runner", "position", "finish_time"],
                "rows": [["Mara", 1, "31:02"], ["Jonas", 2, "31:06"], ["Leila", 3, "31:40"], ["Ben", 4, None]]}),
    dict(q="In which room is the Thursday workshop held?",
         t=("Training week. Monday's onboarding runs in room 2. The Tuesday and Thursday workshops share room "
            "7, except that the Thursday session moves to room 9 because of the fire drill. Friday's review is "
            "in the main hall."),
         a=["room 9", "9"],
         schema=[{"name": "session", "kind": "text"}, {"name": "day", "kind": "text"},
                 {"name": "room", "kind": "text"}],
         table={"slots": ["session", "day", "room"],
                "rows": [["onboarding", "Monday", "room 2"], ["workshop", "Tuesday", "room 7"],
                         ["workshop", "Thursday", "room 9"], ["review", "Friday", "main hall"]]}),
    dict(q="How many books did the library lend in total over the weekend?",
         t=("Circulation log. On Saturday the library lent 132 books and received 98 returns. On Sunday it "
            "lent 87 books; returns were not counted because the scanner was down."),
         a=["219"],
         schema=[{"name": "day", "kind": "text"}, {"name": "books_lent", "kind": "number"},
                 {"name": "returns", "kind": "number"}],
         table={"slots": ["day", "books_lent", "returns"],
                "rows": [["Saturday", 132, 98], ["Sunday", 87, None]]}),
    dict(q="Which supplier delivered late twice?",
         t=("Supplier scorecard. Alder Metals delivered on time in weeks 1, 2 and 3. Birchwood Plastics was "
            "late in week 1 and on time afterwards. Copperline delivered late in week 2 and again in week 3."),
         a=["Copperline"],
         schema=[{"name": "supplier", "kind": "text"}, {"name": "week", "kind": "number"},
                 {"name": "on_time", "kind": "boolean"}],
         table={"slots": ["supplier", "week", "on_time"],
                "rows": [["Alder Metals", 1, True], ["Alder Metals", 2, True], ["Alder Metals", 3, True],
                         ["Birchwood Plastics", 1, False], ["Birchwood Plastics", 2, True],
                         ["Birchwood Plastics", 3, True], ["Copperline", 2, False], ["Copperline", 3, False]]}),
]


# --------------------------------------------------------------------------
# planning: calendar scheduling with busy blocks and preferences

def calendar_prompt(day_hours, people, note=""):
    lines = [f"You need to schedule a meeting for {', '.join(p for p, _ in people)} for half an hour between "
             f"the work hours of {day_hours}.", "Here are the existing schedules for everyone during the days:"]
    lines += [f"{p} {busy}" for p, busy in people]
    if note:
        lines.append(note)
    return "\n".join(lines)


PLANNING = [
    (calendar_prompt("9:00 to 17:00 on Monday", [
        ("Anna", "is busy on Monday during 9:00 to 10:30, 12:00 to 13:00, 16:00 to 17:00;"),
        ("Ben", "is busy on Monday during 10:30 to 11:30, 13:00 to 16:00;"),
    ]), "Monday, 11:30 - 12:00"),
    (calendar_prompt("9:00 to 17:00 on Monday", [
        ("Chloe", "is busy on Monday during 9:00 to 9:30, 10:00 to 17:00;"),
        ("Dev", "has no meetings the whole day."),
    ]), "Monday, 9:30 - 10:00"),
    (calendar_prompt("9:00 to 17:00 on Tuesday", [
        ("Eli", "is busy on Tuesday during 9:00 to 12:00;"),
        ("Fay", "is busy on Tuesday during 12:30 to 17:00;"),
    ]), "Tuesday, 12:00 - 12:30"),
    (calendar_prompt("9:00 to 17:00 on Wednesday", [
        ("Gus", "is busy on Wednesday during 9:00 to 11:00, 14:00 to 15:00;"),
        ("Hana", "is busy on Wednesday during 11:00 to 14:00;"),
        ("Ivo", "is busy on Wednesday during 15:30 to 17:00;"),
    ]), "Wednesday, 15:00 - 15:30"),
    (calendar_prompt("9:00 to 17:00 on Thursday", [
        ("Jia", "is busy on Thursday during 9:00 to 13:00;"),
        ("Kai", "is busy on Thursday during 13:30 to 17:00;"),
    ], "Jia would rather not meet before 13:00."), "Thursday, 13:00 - 13:30"),
    (calendar_prompt("9:00 to 17:00 on Friday", [
        ("Lena", "is busy on Friday during 10:00 to 16:30;"),
        ("Milo", "is busy on Friday during 9:00 to 10:00;"),
    ]), "Friday, 16:30 - 17:00"),
    (calendar_prompt("9:00 to 17:00 on either Monday or Tuesday", [
        ("Nora", "is busy on Monday during 9:00 to 17:00; Tuesday during 9:00 to 14:00;"),
        ("Omar", "is busy on Tuesday during 14:00 to 15:00;"),
    ], "Both would like to meet at their earliest availability."), "Tuesday, 15:00 - 15:30"),
    (calendar_prompt("9:00 to 17:00 on Monday", [
        ("Pia", "is busy on Monday during 9:30 to 17:00;"),
        ("Quin", "has no meetings the whole day."),
    ]), "Monday, 9:00 - 9:30"),
    (calendar_prompt("9:00 to 17:00 on Wednesday", [
        ("Rosa", "is busy on Wednesday during 9:00 to 10:00, 11:00 to 12:00, 13:00 to 14:00;"),
        ("Sami", "is busy on Wednesday during 10:00 to 11:00, 12:00 to 13:00, 14:30 to 17:00;"),
    ]), "Wednesday, 14:00 - 14:30"),
    (calendar_prompt("9:00 to 17:00 on Thursday or Friday", [
        ("Tess", "is busy on Thursday during 9:00 to 17:00; Friday during 9:00 to 11:00;"),
        ("Uri", "is busy on Friday during 11:00 to 12:30;"),
    ], "Uri prefers the earliest free slot."), "Friday, 12:30 - 13:00"),
]


# --------------------------------------------------------------------------
# summarization: short meeting transcripts with a query-focused summary

SUMMARIZATION = [
    ("Summarize the decision about the release date.",
     ["PM: The beta feedback is mostly positive but two crash reports are still open.",
      "Lead: Both crashes are in the export path. We need about a week.",
      "QA: I'd rather not ship with known crashes.",
      "PM: Then we move the release from the 3rd to the 10th and announce it Monday."],
     "The team moved the release from the 3rd to the 10th to fix two open export crashes."),
    ("What did the group agree about the office move?",
     ["Ops: The new lease starts in September.",
      "Finance: Moving in August would mean paying two rents for a month.",
      "Ops: Then we pack the last week of August and move on 1 September.",
      "HR: I'll tell staff to work from home that week."],
     "They will move on 1 September with staff working from home during the last week of August."),
    ("Summarize the discussion about the onboarding survey.",
     ["HR: Response rate was 40 percent, lower than last quarter.",
      "Manager: People said the survey was too long.",
      "HR: We can cut it to five questions and send it in week two instead of week six."],
     "Responses fell to 40 percent, so the survey will be cut to five questions and sent in week two."),
    ("What was decided about the vendor contract?",
     ["Legal: The vendor wants a three-year term.",
      "CTO: Their uptime last year was below the agreed level twice.",
      "Legal: We can sign for one year with an option to extend.",
      "CFO: Agreed, one year with an extension option."],
     "They will sign a one-year contract with an option to extend because of the vendor's uptime record."),
    ("Summarize what was said about the mobile app crash rate.",
     ["Eng: Crash rate doubled after version 4.2.",
      "Eng: The cause is a memory leak in the image cache.",
      "PM: Can we hotfix this week?",
      "Eng: Yes, a patch is ready for review tomorrow."],
     "Crashes doubled after 4.2 due to an image cache memory leak; a hotfix is ready for review tomorrow."),
    ("What did the committee conclude about the budget surplus?",
     ["Chair: We ended the year with a surplus of twelve thousand.",
      "Member: The community garden needs new fencing.",
      "Treasurer: Fencing costs about five thousand; the rest could go to reserves.",
      "Chair: Let's vote. Motion carries."],
     "The committee approved spending about five thousand of the surplus on garden fencing and keeping the rest as reserves."),
    ("Summarize the hiring discussion.",
     ["Lead: We have budget for one senior and one junior engineer.",
      "Recruiter: The senior role has three strong candidates.",
      "Lead: Let's pause the junior role until the senior hire starts, so they can mentor."],
     "They will hire the senior engineer first and pause the junior role until the senior starts."),
    ("What was agreed about the customer complaint?",
     ["Support: The client was billed twice for March.",
      "Billing: The duplicate was a retry bug, now fixed.",
      "Support: Should we just refund?",
      "Manager: Refund the charge and add one free month as an apology."],
     "The team will refund the duplicate March charge and give the client one free month."),
    ("Summarize the discussion on the data retention policy.",
     ["Security: We keep raw logs for three years, which is longer than needed.",
      "Legal: Regulators require only twelve months.",
      "Eng: Shorter retention also cuts storage costs.",
      "Security: Then we set retention to twelve months starting next quarter."],
     "Log retention will be cut from three years to the required twelve months starting next quarter."),
    ("What did the team decide about the design review?",
     ["Designer: The new checkout flow tested well with users.",
      "Eng: It needs a new payment API we don't have yet.",
      "PM: We ship the visual changes now and the new flow once the API lands."],
     "They will ship the visual changes now and the new checkout flow after the payment API is available."),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    qa = []
    for i, item in enumerate(QA):
        schema = schema_from_json(item["schema"])
        table = GoldTable.from_json(item["table"])
        qa.append(TaskInstance(f"synthetic-qa-{i:02d}", item["q"], item["t"], tuple(item["a"]), "qa", schema, table))
    planning = [TaskInstance(f"synthetic-planning-{i:02d}", CALENDAR_QUERY, text, (gold,), "planning")
                for i, (text, gold) in enumerate(PLANNING)]
    summ = [TaskInstance(f"synthetic-summarization-{i:02d}", q, "\n".join(lines), (gold,), "summarization")
            for i, (q, lines, gold) in enumerate(SUMMARIZATION)]
    for name, tasks in (("qa", qa), ("planning", planning), ("summarization", summ)):
        n = write_dataset(tasks, OUT / f"{name}.jsonl")
        print(f"{OUT / name}.jsonl: {n} synthetic tasks")


if __name__ == "__main__":
    main()
