/** Demo catalogue. Sources are byte-identical copies of the files
 * under programs/; the test suite enforces the equality. */

export interface Demo {
  key: string;
  title: string;
  file: string;
  blurb: string;
  source: string;
}

export const DEMOS: Demo[] = [
  {
    key: "golden",
    title: "Broadcast walkthrough",
    file: "golden.aeff",
    blurb: "Three forced steps carry a request from client to server.",
    source: `(* A client asking a server for one batch of data. The first three steps
   are forced: the request signal hoists out of the left process, the
   broadcast turns it into an interrupt for the right process, and the
   interrupt descends into the server computation. *)

signal request : int
signal response : int list

run (↑request(1, promise (response ys |-> return <<ys>>) as p in
     await p until <<vs>> in return vs))
||
run (promise (request offset |->
        ↑response([10 * offset], return <<()>>)
     ) as q in return q)
`,
  },
  {
    key: "minifeed",
    title: "Mini feed",
    file: "minifeed.aeff",
    blurb: "Inject nextItem () and step; each click displays the next number.",
    source: `(* Smallest interactive feed: each nextItem interrupt from the outside
   world displays the next number. Handy for stepping by hand. *)

signal nextItem : unit
signal display : string

effect rec iotaShow = { nextItem -> ({display}, iotaShow) }

let rec show (n : int) : <<unit>> ! ({}, iotaShow) =
    promise (nextItem _ |->
        send display (toString n);
        show (n + 1)
    ) as p in return p

run (let p = show 1 in return ())
`,
  },
  {
    key: "preempt",
    title: "Preemptable worker",
    file: "preempt.aeff",
    blurb: "Inject stop () to freeze the sum mid-flight, go () to resume it.",
    source: `(* Preemptive scheduling from inside the language: a stop interrupt parks
   the whole continuation behind an await, and go releases it.  The running
   computation needs no changes and no special type to be preemptable. *)

signal stop : unit
signal go : unit

effect rec iotaStopped = { stop -> ({}, iotaStopped), go -> ({}, {}) }
effect rec iotaRun = { stop -> ({}, iotaStopped) }

let rec waitForStop (u : unit) : <<unit>> ! ({}, iotaRun) =
    promise (stop _ |->
        promise (go _ |-> return <<()>>) as p in
        await p until <<_>> in waitForStop ()
    ) as p' in return p'

let rec sumTo (n : int) : int =
    if n = 0 then return 0 else
    let m = sumTo (n - 1) in
    return (n + m)

run (
    waitForStop ();
    sumTo 20
)
`,
  },
  {
    key: "feed",
    title: "Client/server feed",
    file: "feed.aeff",
    blurb: "The full data feed conversation; drive it with nextItem ().",
    source: `signal batchSizeRequest : unit
signal batchSizeResponse : int
signal request : int
signal response : int list
signal nextItem : unit
signal display : string

effect rec iotaB = { batchSizeRequest -> ({batchSizeResponse}, iotaB) }
effect rec iotaR = { request -> ({response}, iotaR) }

effect rec iotaClientBusy = {
    nextItem -> ({request, display}, iotaClientBusy),
    response -> ({}, {})
}
effect rec iotaClient = { nextItem -> ({request, display}, iotaClientBusy) }

let server (batchSize : int) =
    let rec waitForBatchSize (u : unit) : <<unit>> ! ({}, iotaB) =
        promise (batchSizeRequest _ |->
            send batchSizeResponse batchSize;
            waitForBatchSize ()
        ) as p in return p
    in
    let rec waitForRequest (u : unit) : <<unit>> ! ({}, iotaR) =
        promise (request offset |->
            let payload = map (fun x |-> return (10 * x))
                              (range offset (offset + batchSize - 1)) in
            send response payload;
            waitForRequest ()
        ) as p in return p
    in
    waitForBatchSize (); waitForRequest ()

let client () =
    let (cachedData, requestInProgress, currentItem) =
        return (ref [], ref false, ref 0) in
    send batchSizeRequest ();
    promise (batchSizeResponse batchSize |-> return <<batchSize>>)
        as batchSizePromise in
    let requestNewData (offset : int) =
        requestInProgress := true;
        send request offset;
        promise (response newBatch |->
            cachedData := (!cachedData) @ newBatch;
            requestInProgress := false;
            return <<()>>
        ) as _ in return ()
    in
    let rec clientLoop (batchSize : int) : <<unit>> ! ({}, iotaClient) =
        promise (nextItem _ |->
            let cachedSize = length (!cachedData) in
            (if ((!currentItem) > cachedSize - batchSize / 2)
                && (not (!requestInProgress)) then
                 requestNewData (cachedSize + 1)
             else
                 return ());
            (if (!currentItem) < cachedSize then
                 send display (toString (nth (!cachedData) (!currentItem)));
                 currentItem := (!currentItem) + 1
             else
                 send display "please wait a bit and try again");
            clientLoop batchSize
        ) as p in return p
    in
    await batchSizePromise until <<batchSize>> in clientLoop batchSize

let rec user (u : unit) : unit ! ({nextItem}, {}) =
    let rec wait (n : int) : unit =
        if n = 0 then return () else wait (n - 1)
    in
    send nextItem (); wait 10; user ()

run (server 42) || run (client ())
`,
  },
  {
    key: "lcg",
    title: "Random-number runner",
    file: "lcg.aeff",
    blurb: "A linear congruential generator answering three requests.",
    source: `(* A linear congruential generator run as a separate process: the runner
   owns the seed and answers randomReq interrupts with the current seed,
   stepping it for the next request.  The client pairs each request with a
   call number so a response can only fulfil its own promise. *)

signal randomReq : int
signal randomRes : int * int
signal display : int

effect rec iotaLcg = { randomReq -> ({randomRes}, iotaLcg) }

let linearCongruenceGeneratorRunner (modulus : int) (a : int) (c : int)
                                    (initialSeed : int) =
    let rec loop (seed : int) : <<unit>> ! ({}, iotaLcg) =
        promise (randomReq callNo |->
            let seed' = (a * seed + c) mod modulus in
            send randomRes (seed, callNo);
            loop seed'
        ) as p in return p
    in loop initialSeed

let client () =
    let callCounter = return (ref 0) in
    let random () =
        let callNo = !callCounter in
        callCounter := callNo + 1;
        send randomReq callNo;
        promise (randomRes (n, callNo') when callNo = callNo' |->
            return <<n mod 10>>
        ) as p in
        await p until <<m>> in return m
    in
    let x = random () in
    send display x;
    let y = random () in
    send display y;
    let z = random () in
    send display z;
    return (x, y, z)

run (linearCongruenceGeneratorRunner 101 7 5 13) || run (client ())
`,
  },
];
